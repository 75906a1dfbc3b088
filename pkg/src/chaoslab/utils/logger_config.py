"""Basic logging configuration helpers."""

import logging
import sys

FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def setup_logging(name="chaoslab", level=logging.INFO, log_file=None):
    """
    Sets up and returns a logger with a console handler and, when
    ``log_file`` is given, a file handler. Calling it twice does not
    duplicate handlers.
    """
    logger = logging.getLogger(name)
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
        if not isinstance(level, int):
            level = logging.INFO
    logger.setLevel(level)
    formatter = logging.Formatter(FORMAT)

    for handler in list(logger.handlers):
        if getattr(handler, "_chaoslab", False):
            logger.removeHandler(handler)
            handler.close()

    # Console handler (stderr keeps stdout free for machine-readable output)
    ch = logging.StreamHandler(sys.stderr)
    ch.setLevel(level)
    ch.setFormatter(formatter)
    ch._chaoslab = True
    logger.addHandler(ch)

    # File handler
    if log_file:
        fh = logging.FileHandler(log_file)
        fh.setLevel(level)
        fh.setFormatter(formatter)
        fh._chaoslab = True
        logger.addHandler(fh)

    return logger
