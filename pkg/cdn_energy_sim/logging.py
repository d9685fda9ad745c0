import logging
import sys

from pythonjsonlogger import jsonlogger

LOGGER_NAME = "cdn_energy_sim"
TEXT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
JSON_FORMAT = "%(asctime)s %(name)s %(levelname)s %(message)s"


def setup_logging(
    debug: bool = False, log_format: str = "text", log_level: str = "INFO"
) -> logging.Logger:
    """
    Configure the package logger.

    Records go to stderr so stdout stays free for command output.

    Args:
        debug: Whether to enable debug logging; overrides ``log_level``
        log_format: ``text`` for human-readable lines, ``json`` for one JSON
            object per record (``extra`` fields become keys)
        log_level: Level name used when ``debug`` is off

    Returns:
        Logger instance
    """
    logger = logging.getLogger(LOGGER_NAME)
    level = logging.DEBUG if debug else logging.getLevelName(log_level.upper())
    logger.setLevel(level)

    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(level)

    formatter: logging.Formatter
    if log_format == "json":
        formatter = jsonlogger.JsonFormatter(JSON_FORMAT)
    else:
        formatter = logging.Formatter(TEXT_FORMAT)
    handler.setFormatter(formatter)

    # Replace rather than stack handlers on repeated setup.
    for existing in list(logger.handlers):
        logger.removeHandler(existing)
    logger.addHandler(handler)
    logger.propagate = False

    return logger


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance below the package logger.

    Args:
        name (str): Module name, usually ``__name__``.

    Returns:
        logging.Logger: Logger instance.
    """
    if name == LOGGER_NAME or name.startswith(LOGGER_NAME + "."):
        return logging.getLogger(name)
    return logging.getLogger(f"{LOGGER_NAME}.{name}")
