import sys

from app.exceptions.tensorciq_exceptions import (InvalidInputException, ServiceException, InvariantViolation,
                                                 TensorCiqException, InitExhausted)
from app.utils.logger import logger

EXIT_OK = 0
EXIT_INPUT_ERROR = 2
EXIT_ALGORITHMIC_FAILURE = 3
EXIT_INVARIANT_VIOLATION = 4


def handle_exception(exc: BaseException) -> int:
    """Logs the exception, reports it on stderr and returns the process exit code."""
    if isinstance(exc, InvalidInputException):
        return handle_invalid_input(exc)
    if isinstance(exc, InitExhausted):
        return handle_init_exhausted(exc)
    if isinstance(exc, ServiceException):
        return handle_service_error(exc)
    if isinstance(exc, InvariantViolation):
        return handle_invariant_violation(exc)
    if isinstance(exc, TensorCiqException):
        return handle_invariant_violation(exc)
    return handle_unexpected_error(exc)


def handle_invalid_input(exc: InvalidInputException) -> int:
    logger.error(exc)
    _report(exc.to_dict())
    return EXIT_INPUT_ERROR


def handle_init_exhausted(exc: InitExhausted) -> int:
    logger.error(exc)
    _report(exc.to_dict())
    return EXIT_ALGORITHMIC_FAILURE


def handle_service_error(exc: ServiceException) -> int:
    logger.exception(exc)
    _report(exc.to_dict())
    return EXIT_ALGORITHMIC_FAILURE


def handle_invariant_violation(exc: TensorCiqException) -> int:
    logger.exception(exc)
    _report(exc.to_dict())
    return EXIT_INVARIANT_VIOLATION


def handle_unexpected_error(exc: BaseException) -> int:
    logger.exception(exc)
    _report({"message": "Unknown Error", "detail": str(exc)})
    return EXIT_INVARIANT_VIOLATION


def _report(content: dict):
    print(f"error: {content}", file=sys.stderr)
