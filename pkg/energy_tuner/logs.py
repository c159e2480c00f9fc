"""Logging setup: plain text by default, JSON lines when LOG_FORMAT=json."""

from __future__ import annotations

import json
import logging
import time

from .config import get_settings

_configured = False


class _JsonFormatter(logging.Formatter):
    """Format log records as JSON with timestamp, level, message, and extra fields."""

    def format(self, record: logging.LogRecord) -> str:
        obj = {
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S.000Z", time.gmtime(record.created)),
            "level": record.levelname,
            "message": record.getMessage(),
            "logger": record.name,
        }
        if hasattr(record, "correlation_id"):
            obj["correlation_id"] = record.correlation_id
        if hasattr(record, "operation_name"):
            obj["operation_name"] = record.operation_name
        return json.dumps(obj, ensure_ascii=False)


def configure_logging() -> None:
    """Install the root handler once, honouring LOG_FORMAT and LOG_LEVEL."""
    global _configured
    if _configured:
        return
    settings = get_settings()
    handler = logging.StreamHandler()
    if settings.LOG_FORMAT == "json":
        handler.setFormatter(_JsonFormatter())
    else:
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    for h in logging.root.handlers[:]:
        logging.root.removeHandler(h)
    logging.root.addHandler(handler)
    logging.root.setLevel(settings.LOG_LEVEL.upper())
    _configured = True
