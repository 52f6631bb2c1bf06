"""
Logging configuration for vibench.
"""

import logging
import logging.handlers
from pathlib import Path
from typing import TYPE_CHECKING, Optional

if TYPE_CHECKING:
    from .config import LoggingConfig

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def parse_size(max_size: str) -> int:
    """Convert "10MB" / "512KB" / "1048576" to bytes."""
    text = str(max_size).strip().upper()
    if text.endswith('MB'):
        return int(text[:-2]) * 1024 * 1024
    if text.endswith('KB'):
        return int(text[:-2]) * 1024
    return int(text)


def setup_logging(config: 'LoggingConfig', level: Optional[str] = None) -> logging.Logger:
    """Configure the ``vibench`` logger; ``level`` overrides the configured level."""
    logger = logging.getLogger('vibench')

    log_level = getattr(logging, (level or config.level).upper(), logging.INFO)
    logger.setLevel(log_level)

    # Clear any existing handlers
    logger.handlers.clear()

    formatter = logging.Formatter(LOG_FORMAT)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    if config.file:
        log_file = Path(config.file)
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_file,
            maxBytes=parse_size(config.max_size),
            backupCount=config.backup_count
        )
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    # Don't propagate to root logger
    logger.propagate = False

    return logger
