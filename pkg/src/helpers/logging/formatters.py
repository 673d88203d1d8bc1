import json
import logging
from datetime import datetime, timezone

# run context attached with ``extra=`` by the commands and samplers
RUN_FIELDS = ("command", "master_seed", "workers", "n_trials")


def run_context(record: logging.LogRecord) -> dict:
    return {name: getattr(record, name) for name in RUN_FIELDS if hasattr(record, name)}


class PrettyFormatter(logging.Formatter):
    """Human-readable lines; chunk threads are named so interleaved logs stay readable."""

    def __init__(self):
        super().__init__(
            fmt="%(name)s: [%(asctime)s] %(levelname)s (%(threadName)s): %(message)s",
            datefmt="%Y-%m-%d %H:%M:%S",
        )


class JSONFormatter(logging.Formatter):
    """One JSON object per record, run context fields included when present."""

    def format(self, record: logging.LogRecord) -> str:
        log_entry = {
            "timestamp": datetime.fromtimestamp(record.created, timezone.utc)
            .isoformat()
            .replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "thread": record.threadName,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }
        log_entry.update(run_context(record))

        if record.exc_info:
            log_entry["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_entry, default=str)
