"""
Logging configuration utilities.
"""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

PACKAGE_LOGGERS = ("geored", "components", "services", "repositories", "schemas", "utils", "main")


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None) -> logging.Logger:
    """
    Setup logging configuration.

    Console output goes to stderr; stdout carries the JSON reports.

    Args:
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR)
        log_file: Optional log file path

    Returns:
        Configured logger
    """
    level = getattr(logging, log_level.upper(), logging.INFO)

    # Create formatter
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    handlers: list[logging.Handler] = []

    # Console handler
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_handler.setFormatter(formatter)
    handlers.append(console_handler)

    # File handler
    file_warning = None
    try:
        if log_file:
            log_file_path = Path(log_file)
            log_file_path.parent.mkdir(parents=True, exist_ok=True)
        else:
            log_dir = Path("data/logs")
            log_dir.mkdir(parents=True, exist_ok=True)
            log_file_path = log_dir / f"geored-{datetime.now().strftime('%Y%m%d')}.log"
        file_handler = logging.FileHandler(log_file_path)
        file_handler.setLevel(logging.DEBUG)
        file_handler.setFormatter(formatter)
        handlers.append(file_handler)
    except OSError as e:
        file_warning = f"File logging disabled: {e}"

    # Package loggers share the handlers; clear existing ones first
    for name in PACKAGE_LOGGERS:
        package_logger = logging.getLogger(name)
        package_logger.setLevel(min(level, logging.DEBUG) if len(handlers) > 1 else level)
        package_logger.handlers.clear()
        package_logger.propagate = False
        for handler in handlers:
            package_logger.addHandler(handler)

    logger = logging.getLogger("geored")
    if file_warning:
        logger.warning(file_warning)
    logger.info(f"Logging initialized - Level: {log_level}")
    return logger
