import logging
from pathlib import Path
from sys import stdout
from typing import Sequence

LOG_ENTRY_FORMAT = "%(asctime)s [%(levelname)s]: %(message)s"
LOG_FILE_NAME = "splitdenoise.log"

# uvicorn runs with `log_config=None`; its error logger reports bind failures
SERVER_LOGGERS: Sequence[str] = ("uvicorn", "uvicorn.error")


def build_handler(destination: str, destination_type: str) -> logging.Handler:
    """
    A handler writing to `destination`: a log file, `splitdenoise.log` inside a
    directory, or stdout for anything else.
    """

    handler: logging.Handler
    if destination_type == "file":
        handler = logging.FileHandler(destination, encoding="utf-8")
    elif destination_type == "directory":
        logfile = Path(destination) / LOG_FILE_NAME
        logfile.touch(exist_ok=True)
        handler = logging.FileHandler(logfile, encoding="utf-8")
    else:
        handler = logging.StreamHandler(stdout)

    handler.setFormatter(logging.Formatter(LOG_ENTRY_FORMAT))
    return handler


def get_splitdenoise_logger(
    level: str,
    destination: str,
    destination_type: str,
) -> logging.Logger:
    """
    Configure and return the top-level splitdenoise logger. Every module logs
    through `logging.getLogger(__name__)`, which resolves to a descendant of
    `splitdenoise` and so inherits this configuration.

    The uvicorn loggers share the same handler, so server lifecycle messages and
    per-request lines land in one stream. Calling this again replaces the
    handlers instead of stacking them.
    """

    root_logger = logging.getLogger()
    for root_handler in list(root_logger.handlers):
        root_logger.removeHandler(root_handler)

    handler = build_handler(destination, destination_type)
    for name in ("splitdenoise", *SERVER_LOGGERS):
        configured = logging.getLogger(name)
        configured.setLevel(logging.getLevelName(level))
        configured.propagate = False
        for existing in list(configured.handlers):
            configured.removeHandler(existing)
            existing.close()
        configured.addHandler(handler)

    return logging.getLogger("splitdenoise")
