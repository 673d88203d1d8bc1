import logging
import logging.config
import sys

from config.logging import LogSettings
from helpers.logging.formatters import JSONFormatter, PrettyFormatter


def setup_logger(settings: LogSettings):
    formatter = JSONFormatter if settings.format_ == "Json" else PrettyFormatter

    handlers = {
        # stdout carries result tables, logs go to stderr
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "default",
            "stream": sys.stderr,
            "level": settings.level,
        }
    }
    if settings.file:
        handlers["file"] = {
            "class": "logging.FileHandler",
            "formatter": "default",
            "filename": settings.file,
            "encoding": "utf-8",
            "level": settings.level,
        }

    logging_config = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "default": {
                "()": formatter,
            }
        },
        "handlers": handlers,
        "root": {"level": settings.level, "handlers": list(handlers)},
        "loggers": {
            "numba": {
                "level": settings.numba_level,
                "handlers": list(handlers),
                "propagate": False,
            },
        },
    }

    logging.config.dictConfig(logging_config)
