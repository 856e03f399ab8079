"""Logging configuration for the Posterior Fusion Toolkit."""

import logging
import sys
from pathlib import Path
from typing import Optional


class ColoredFormatter(logging.Formatter):
    """Colored log formatter for console output."""

    # ANSI color codes
    COLORS = {
        'DEBUG': '\033[36m',      # Cyan
        'INFO': '\033[32m',       # Green
        'WARNING': '\033[33m',    # Yellow
        'ERROR': '\033[31m',      # Red
        'CRITICAL': '\033[35m',   # Magenta
        'RESET': '\033[0m'
    }

    def format(self, record):
        record = logging.makeLogRecord(record.__dict__)
        if record.levelname in self.COLORS:
            record.levelname = f"{self.COLORS[record.levelname]}{record.levelname}{self.COLORS['RESET']}"
        return super().format(record)


class FusionLogger:
    """Logger manager for the toolkit.

    All named loggers live under the ``posterior_fusion`` hierarchy, so
    configuring the root wrapper once configures every service logger.
    """

    ROOT = "posterior_fusion"

    def __init__(self, name: Optional[str] = None):
        self.name = f"{self.ROOT}.{name}" if name else self.ROOT
        self.logger = logging.getLogger(self.name)

    def configure(self, level: str = "INFO", log_file: Optional[str] = None, debug: bool = False):
        """Configure handlers, replacing those of any earlier call."""
        log_level = getattr(logging, level.upper(), logging.INFO)
        if debug:
            log_level = logging.DEBUG
        self.logger.setLevel(log_level)
        for handler in list(self.logger.handlers):
            handler.close()
            self.logger.removeHandler(handler)
        self.logger.propagate = False

        # stdout is reserved for reports and tables
        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setFormatter(ColoredFormatter(
            '%(asctime)s | %(levelname)s | %(message)s',
            datefmt='%H:%M:%S'
        ))
        self.logger.addHandler(console_handler)

        if log_file:
            log_path = Path(log_file)
            log_path.parent.mkdir(parents=True, exist_ok=True)

            file_handler = logging.FileHandler(log_file, encoding='utf-8')
            file_handler.setFormatter(logging.Formatter(
                '%(asctime)s | %(levelname)s | %(name)s | %(message)s',
                datefmt='%Y-%m-%d %H:%M:%S'
            ))
            self.logger.addHandler(file_handler)

    def debug(self, message: str, **kwargs):
        self.logger.debug(message, **kwargs)

    def info(self, message: str, **kwargs):
        self.logger.info(message, **kwargs)

    def warning(self, message: str, **kwargs):
        self.logger.warning(message, **kwargs)

    def error(self, message: str, **kwargs):
        self.logger.error(message, **kwargs)

    def critical(self, message: str, **kwargs):
        self.logger.critical(message, **kwargs)

    def success(self, message: str, **kwargs):
        """Log a completed unit of work."""
        self.logger.info(f"done: {message}", **kwargs)

    def step(self, message: str, **kwargs):
        """Log the start of a pipeline step."""
        self.logger.info(f"-> {message}", **kwargs)


# Global logger instance
logger = FusionLogger()


def get_logger(name: Optional[str] = None) -> FusionLogger:
    """Get logger instance."""
    if name:
        return FusionLogger(name)
    return logger
