import functools
import time
from argparse import Namespace
from typing import Callable

from app.utils.logger import logger

EXIT_UNKNOWN = -1


def log_command(name: str):
    """Logs start, arguments, exit code and duration of a command handler."""

    def decorator(handler: Callable[[Namespace], int]):
        @functools.wraps(handler)
        def wrapper(args: Namespace) -> int:
            start_time = time.time()
            _process_request(name, args)
            exit_code = EXIT_UNKNOWN
            try:
                exit_code = handler(args)
                return exit_code
            finally:
                _process_response(name, exit_code, start_time)

        return wrapper

    return decorator


def _process_request(name: str, args: Namespace):
    arguments = {key: value for key, value in vars(args).items() if key != 'handler'}
    logger.info(f'----> Command: {name} {arguments}')


def _process_response(name: str, exit_code: int, start_time: float):
    duration = time.time() - start_time
    status = exit_code if exit_code != EXIT_UNKNOWN else 'raised'
    logger.info(f"End command: {name}, Exit code: {status}, Duration: {duration:.2f} seconds")
