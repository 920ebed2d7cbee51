"""
utils/logger.py
---------------
Shared loguru logger.

Modules import `logger` from here; `setup_logging()` is called once by the entry point
to install the stderr sink (and the optional rotating file sink) from Settings.
"""

import sys

from loguru import logger

from utils.config import settings

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} [{level}] {name}: {message}"


def setup_logging(level: str | None = None) -> None:
    """Replace loguru's default sink with the configured ones."""
    logger.remove()
    logger.add(
        sys.stderr,
        level=(level or settings.LOG_LEVEL).upper(),
        format=LOG_FORMAT,
        serialize=settings.LOG_SERIALIZE,
    )
    if settings.LOG_FILE:
        logger.add(
            settings.LOG_FILE,
            level="DEBUG",
            rotation="10 MB",
            retention=5,
            serialize=settings.LOG_SERIALIZE,
        )


__all__ = ["logger", "setup_logging"]
