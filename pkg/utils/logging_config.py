"""
Logging configuration for bbjump.

Console output goes to standard error so that data written to standard
output stays machine-readable.
"""

import json
import logging
import logging.handlers
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class JSONFormatter(logging.Formatter):
    """One JSON object per record; merges record.extra_fields when present."""

    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            'timestamp': datetime.fromtimestamp(record.created).isoformat(),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'function': record.funcName,
            'line': record.lineno,
        }
        if record.exc_info:
            log_data['exception'] = self.formatException(record.exc_info)
        extra = getattr(record, 'extra_fields', None)
        if extra:
            log_data.update(extra)
        return json.dumps(log_data, default=str)


class ColoredFormatter(logging.Formatter):
    """ANSI-colored level names for interactive terminals."""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
    }
    RESET = '\033[0m'

    def format(self, record: logging.LogRecord) -> str:
        color = self.COLORS.get(record.levelname)
        message = super().format(record)
        if color is None:
            return message
        return message.replace(record.levelname, f"{color}{record.levelname}{self.RESET}", 1)


def setup_logging(
    log_level: str = 'INFO',
    log_file: Optional[str] = None,
    max_bytes: int = 10 * 1024 * 1024,
    backup_count: int = 3,
    json_format: bool = False,
    colored_console: bool = True,
) -> None:
    """
    Configure the root logger.

    Args:
        log_level: Level name (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional path of a rotating log file
        max_bytes: Rotation size of the log file
        backup_count: Number of rotated files kept
        json_format: Write the log file as JSON lines
        colored_console: Color level names when stderr is a terminal
    """
    numeric_level = getattr(logging, str(log_level).upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(numeric_level)
    root_logger.handlers.clear()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(numeric_level)
    if colored_console and sys.stderr.isatty():
        console_handler.setFormatter(ColoredFormatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    else:
        console_handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    root_logger.addHandler(console_handler)

    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.handlers.RotatingFileHandler(
            log_file, maxBytes=max_bytes, backupCount=backup_count, encoding='utf-8'
        )
        file_handler.setLevel(numeric_level)
        if json_format:
            file_handler.setFormatter(JSONFormatter())
        else:
            file_handler.setFormatter(logging.Formatter(
                LOG_FORMAT + ' - [%(filename)s:%(lineno)d]', datefmt=DATE_FORMAT
            ))
        root_logger.addHandler(file_handler)

    root_logger.debug(f"bbjump logging initialized at {log_level}"
                      + (f", file {log_file}" if log_file else ""))


def get_logger(name: str) -> logging.Logger:
    return logging.getLogger(name)


class LoggerAdapter(logging.LoggerAdapter):
    """Prefixes messages with bound context and exposes it as extra_fields."""

    def process(self, msg, kwargs):
        extra = kwargs.setdefault('extra', {})
        fields = dict(extra.get('extra_fields', {}))
        fields.update(self.extra)
        extra['extra_fields'] = fields
        prefix = ' '.join(f"{k}={v}" for k, v in self.extra.items())
        return (f"[{prefix}] {msg}" if prefix else msg), kwargs


def get_context_logger(name: str, **context) -> LoggerAdapter:
    """
    Get a logger that tags every record with context fields.

    Args:
        name: Logger name
        **context: Fields such as scenario or seed
    """
    return LoggerAdapter(get_logger(name), context)
