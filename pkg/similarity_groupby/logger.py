"""
Logging configuration for the similarity group-by package.

All modules log through children of the ``similarity_groupby`` logger, so a single
``configure_logger`` call (done at import time and again by the CLI) governs the whole package.
Console output uses a text format with file/line context by default; a JSON formatter from
``python-json-logger`` is available for machine-readable benchmark logs.
"""

import logging
import os
import sys

from pythonjsonlogger.json import JsonFormatter

PACKAGE_LOGGER_NAME = "similarity_groupby"
DEFAULT_FORMAT = "%(asctime)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s"
SHORT_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
JSON_FIELDS = "%(asctime)s %(levelname)s %(name)s %(filename)s %(lineno)d %(message)s"

# Checked in order; the first one set wins.
LEVEL_ENV_VARS = ("SGB_LOG_LEVEL", "LOG_LEVEL")


def _resolve_level(level: int | str, fallback: int = logging.INFO) -> int:
    """Turn a level name or number into a logging constant, falling back on unknown names."""
    if isinstance(level, int):
        return level
    resolved = logging.getLevelName(level.strip().upper())
    return resolved if isinstance(resolved, int) else fallback


def _env_level() -> str | None:
    for var in LEVEL_ENV_VARS:
        value = os.environ.get(var)
        if value:
            return value
    return None


def configure_logger(
    name: str | None = None,
    level: int | str = logging.INFO,
    format_string: str | None = None,
    include_file_info: bool = True,
    force_unbuffered: bool = False,
    add_file_handler: bool = False,
    log_file_path: str | None = None,
    log_file_level: int | str = logging.INFO,
    json_format: bool = False,
    env_override: bool = True,
) -> logging.Logger:
    """
    Configure and return a logger with specified settings.

    Args:
    ----
        name: The logger name. Defaults to the package logger.
        level: The minimum level for the console handler, as a name ('DEBUG') or a logging constant.
            ``SGB_LOG_LEVEL`` or ``LOG_LEVEL`` in the environment take precedence.
        format_string: Custom format string. If None, a default with or without file info is used.
        include_file_info: Whether to include filename and line number in text log messages.
        force_unbuffered: Switch stdout/stderr to line buffering regardless of PYTHONUNBUFFERED.
        add_file_handler: Whether to add a file handler in addition to the console handler.
        log_file_path: Path of the log file. Defaults to "similarity_groupby.log".
        log_file_level: Minimum level for the file handler.
        json_format: Emit one JSON object per record instead of text.
        env_override: Let SGB_LOG_LEVEL or LOG_LEVEL replace ``level``. The CLI turns this off when
            --log-level is given.

    Returns:
    -------
        A configured logging.Logger instance.

    Example:
    -------
        >>> logger = configure_logger(level="DEBUG")
        >>> logger.info("Grouping started")
        2026-03-17 14:30:22,531 - INFO - [cli.py:45] - Grouping started

    """
    env_level = _env_level() if env_override else None
    if env_level:
        level = _resolve_level(env_level, fallback=_resolve_level(level))
    level = _resolve_level(level)

    if force_unbuffered or os.environ.get("PYTHONUNBUFFERED", "").lower() in ("1", "true"):
        if hasattr(sys.stdout, "reconfigure"):
            sys.stdout.reconfigure(line_buffering=True)
            sys.stderr.reconfigure(line_buffering=True)

    logger = logging.getLogger(name if name is not None else PACKAGE_LOGGER_NAME)

    # Clear any existing handlers to avoid duplicate logs
    if logger.handlers:
        logger.handlers.clear()
    logger.setLevel(level)
    logger.propagate = False

    if format_string is None:
        format_string = DEFAULT_FORMAT if include_file_info else SHORT_FORMAT
    formatter: logging.Formatter = JsonFormatter(JSON_FIELDS) if json_format else logging.Formatter(format_string)

    # Logs go to stderr so that rendered query results on stdout stay clean.
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(level)
    logger.addHandler(console_handler)

    if add_file_handler:
        file_handler = logging.FileHandler(log_file_path or f"{PACKAGE_LOGGER_NAME}.log")
        file_handler.setFormatter(formatter)
        file_handler.setLevel(_resolve_level(log_file_level))
        logger.addHandler(file_handler)

    return logger


def get_logger(module_name: str) -> logging.Logger:
    """
    Return the logger for a package module.

    Args:
    ----
        module_name: Usually ``__name__`` of the calling module.

    Returns:
    -------
        A child of the package logger, so it shares the package handlers.

    """
    if module_name == PACKAGE_LOGGER_NAME or module_name.startswith(f"{PACKAGE_LOGGER_NAME}."):
        return logging.getLogger(module_name)
    return logging.getLogger(f"{PACKAGE_LOGGER_NAME}.{module_name}")


# Default package logger
logger = configure_logger(name=PACKAGE_LOGGER_NAME, level=_env_level() or "WARNING")


class LoggerContext:
    """
    Context manager for temporarily changing logger levels.

    Example:
    -------
        >>> with LoggerContext(logger, logging.DEBUG):
        ...     logger.debug("Only logged inside this block")

    """

    def __init__(self, target_logger: logging.Logger, level: int | str):
        """
        Initialize a logger context with specified logger and temporary level.

        Args:
        ----
            target_logger: The logger to modify.
            level: The logging level to temporarily apply.

        """
        self.logger = target_logger
        self.level = _resolve_level(level)
        self.previous_level = target_logger.level
        self.previous_handler_levels = [handler.level for handler in target_logger.handlers]

    def __enter__(self) -> logging.Logger:
        """Set temporary logging level and return the logger."""
        self.logger.setLevel(self.level)
        for handler in self.logger.handlers:
            handler.setLevel(self.level)
        return self.logger

    def __exit__(self, exc_type, exc_val, exc_tb) -> None:
        """Restore the original logging levels."""
        self.logger.setLevel(self.previous_level)
        for handler, handler_level in zip(self.logger.handlers, self.previous_handler_levels, strict=False):
            handler.setLevel(handler_level)
