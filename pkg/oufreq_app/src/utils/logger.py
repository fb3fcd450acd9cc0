"""
Logging utilities for OUFreq.
Configures application-wide logging for simulations and experiments.
"""

import logging  # Python's built-in logging module
import logging.handlers  # For the rotating file handler
import os  # For file system operations
import sys  # For the stdout stream
from typing import Optional, Union  # Type hints for better code documentation

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def resolve_level(level: Optional[Union[int, str]], default: int = logging.INFO) -> int:
    """
    Turn a level name such as "DEBUG" (or an int, or None) into a logging level.

    Args:
        level: Level name, numeric level or None
        default: Level used when the value is missing or unknown

    Returns:
        int: Numeric logging level

    Example:
        >>> resolve_level("debug")
        10
    """
    if level is None or level == "":
        return default
    if isinstance(level, int):
        return level
    numeric = logging.getLevelName(str(level).upper())  # Returns int for known names
    if isinstance(numeric, int):
        return numeric
    return default  # Unknown names fall back silently


def configure_logging(log_file: Optional[str] = 'oufreq.log',
                      console_level: Union[int, str, None] = logging.INFO,
                      file_level: Union[int, str, None] = logging.DEBUG,
                      max_bytes: int = 4 * 1024 * 1024,  # 4MB default max file size
                      backup_count: int = 3,
                      header: Optional[str] = None) -> logging.Logger:
    """
    Configure logging for the toolkit with console and optional file output.

    Args:
        log_file: Path to the log file, or None for console-only logging
        console_level: Logging level for console output (default: INFO)
        file_level: Logging level for file output (default: DEBUG)
        max_bytes: Maximum size of log file before rotation (default: 4MB)
        backup_count: Number of backup files to keep during rotation
        header: Line written to the log file before the first record of this run

    Returns:
        logging.Logger: Configured root logger instance

    Example:
        >>> logger = configure_logging('runs/oufreq.log', logging.DEBUG)
        >>> logger.info("Experiment started")
    """
    console_level = resolve_level(console_level)
    file_level = resolve_level(file_level, logging.DEBUG)

    root_logger = logging.getLogger()  # Get root logger instance
    # Capture everything either handler might want
    root_logger.setLevel(min(console_level, file_level) if log_file else console_level)

    # Remove existing handlers to avoid duplication during reconfiguration
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(LOG_FORMAT)

    # Console handler for real-time progress
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(console_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        # Create the log directory if it doesn't exist
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir, exist_ok=True)

        if header:
            with open(log_file, "a", encoding="utf-8") as f:
                f.write(header.rstrip("\n") + "\n")

        # Rotating file handler for persistent logging
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding='utf-8'
        )
        file_handler.setLevel(file_level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    logger = logging.getLogger(__name__)
    logger.info(f"Logging configured: console={logging.getLevelName(console_level)}, "
                f"file={logging.getLevelName(file_level) if log_file else 'off'}, "
                f"log_file={log_file}")

    return root_logger


def get_logger(name: str) -> logging.Logger:
    """
    Get a logger with the specified name.

    Args:
        name: Logger name (typically __name__ of the calling module)

    Returns:
        logging.Logger: Logger instance for the specified name
    """
    return logging.getLogger(name)


def set_module_level(module_name: str, level: Union[int, str]) -> None:
    """
    Set logging level for a specific module to control verbosity.

    Args:
        module_name: Name of the module to configure
        level: Logging level (e.g., logging.DEBUG or "DEBUG")

    Example:
        >>> set_module_level('oufreq_app.src.core.montecarlo', logging.WARNING)
        >>> # Per-replication progress messages are now hidden
    """
    numeric = resolve_level(level)
    logging.getLogger(module_name).setLevel(numeric)
    logging.getLogger(__name__).info(
        f"Set logging level for {module_name} to {logging.getLevelName(numeric)}")
