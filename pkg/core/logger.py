"""Central logging configuration: stdlib handlers with structlog key-value events."""

import logging
import sys
from typing import Optional

import structlog

from .config import settings

APP_LOGGERS = [
    "cli",
    "routers",
    "services",
    "infrastructure",
    "dependencies",
    "core",
]

THIRD_PARTY_LOGGERS = [
    "uvicorn.access",
    "fastapi",
    "httpx",
]


def setup_logging(
    level: Optional[str] = None,
    json_logs: Optional[bool] = None,
    include_timestamp: bool = True,
) -> None:
    """
    Setup application-wide logging configuration.

    Args:
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL); defaults to settings.LOG_LEVEL
        json_logs: Render events as JSON lines instead of key=value pairs
        include_timestamp: Whether to include an ISO timestamp in every event
    """
    level = level or settings.LOG_LEVEL
    json_logs = settings.LOG_JSON if json_logs is None else json_logs
    numeric_level = getattr(logging, level.upper(), logging.INFO)

    # Logs go to stderr so CLI stdout stays machine-readable
    logging.basicConfig(
        level=numeric_level,
        format="%(message)s",
        handlers=[logging.StreamHandler(sys.stderr)],
        force=True,
    )

    processors = [
        structlog.stdlib.add_log_level,
        structlog.stdlib.add_logger_name,
    ]
    if include_timestamp:
        processors.append(structlog.processors.TimeStamper(fmt="iso"))
    processors.append(
        structlog.processors.JSONRenderer() if json_logs else structlog.dev.ConsoleRenderer(colors=False)
    )

    structlog.configure(
        processors=processors,
        logger_factory=structlog.stdlib.LoggerFactory(),
        wrapper_class=structlog.stdlib.BoundLogger,
        cache_logger_on_first_use=False,
    )

    configure_specific_loggers(numeric_level)

    get_logger(__name__).info("Logging configured", level=level, json=json_logs)


def configure_specific_loggers(base_level: int) -> None:
    """Pin application loggers to the base level and quiet third-party ones."""

    for logger_name in APP_LOGGERS:
        logging.getLogger(logger_name).setLevel(base_level)

    for logger_name in THIRD_PARTY_LOGGERS:
        logging.getLogger(logger_name).setLevel(logging.WARNING)

    # Keep uvicorn.error at INFO for important server messages
    logging.getLogger("uvicorn.error").setLevel(logging.INFO)


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    """
    Get a structured logger bound to the given name.

    Args:
        name: Logger name (typically __name__)
    """
    return structlog.get_logger(name)
