import logging
import os

from app.config.configuration import TensorCiqConfiguration

logging_configuration = TensorCiqConfiguration().logging
level = getattr(logging, logging_configuration.level)

# processName tells pool workers apart in the shared log file
formatter = logging.Formatter('%(asctime)s %(levelname)-2s [%(processName)s] %(message)s',
                              datefmt='%Y-%m-%d %H:%M:%S')


def _handler(handler: logging.Handler) -> logging.Handler:
    handler.setLevel(level)
    handler.setFormatter(formatter)
    return handler


def _build_logger() -> logging.Logger:
    built = logging.getLogger("tensorciq")
    built.setLevel(level)
    if built.handlers:
        return built
    os.makedirs(logging_configuration.log_directory, exist_ok=True)
    built.addHandler(_handler(logging.FileHandler(
        os.path.join(logging_configuration.log_directory, "tensorciq.log"))))
    # stderr, stdout carries the command summaries
    built.addHandler(_handler(logging.StreamHandler()))
    return built


logger = _build_logger()
