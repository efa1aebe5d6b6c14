"""
Logging setup for speclab runs.

Every record passes through a shared :class:`ContextFilter`, so the run
context set with :class:`LogContext` (run id, command, model, realization,
operation) ends up in the JSON lines written by :class:`StructuredFormatter`.
The console handler always writes to the current ``sys.stderr``; stdout is
reserved for command results.
"""

from __future__ import annotations

import json
import logging
import logging.config
import os
import sys
import time
from collections.abc import Callable
from datetime import datetime, timezone
from functools import wraps
from pathlib import Path
from types import TracebackType
from typing import TYPE_CHECKING, Any, ParamSpec, TextIO, TypeVar

if TYPE_CHECKING:
    from .config import LoggingConfig

P = ParamSpec("P")
R = TypeVar("R")

CONTEXT_KEYS = ("run_id", "command", "model", "realization", "operation")
PLAIN_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
QUIET_LOGGERS = ("joblib", "numexpr")


class StructuredFormatter(logging.Formatter):
    """One JSON object per record."""

    def format(self, record: logging.LogRecord) -> str:
        entry: dict[str, Any] = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }
        entry.update({k: getattr(record, k) for k in CONTEXT_KEYS if hasattr(record, k)})
        if hasattr(record, "duration_s"):
            entry["duration_s"] = record.duration_s
        if record.exc_info and record.exc_info[0] is not None:
            entry["exception"] = {
                "type": record.exc_info[0].__name__,
                "message": str(record.exc_info[1]),
                "traceback": self.formatException(record.exc_info),
            }
        return json.dumps(entry, ensure_ascii=False, default=str)


class ContextFilter(logging.Filter):
    """Copies the current run context onto each record."""

    def __init__(self) -> None:
        super().__init__()
        self.context: dict[str, Any] = {}

    def set_context(self, **kwargs: Any) -> None:
        self.context.update(kwargs)

    def clear_context(self) -> None:
        self.context.clear()

    def filter(self, record: logging.LogRecord) -> bool:
        for key, value in self.context.items():
            setattr(record, key, value)
        return True


context_filter = ContextFilter()


class StderrHandler(logging.StreamHandler):  # type: ignore[type-arg]
    """Stream handler that resolves ``sys.stderr`` at emit time."""

    def __init__(self) -> None:
        super().__init__()

    @property  # type: ignore[override]
    def stream(self) -> TextIO:
        return sys.stderr

    @stream.setter
    def stream(self, value: TextIO) -> None:
        pass


def setup_logging(
    level: str = "INFO",
    log_file: str | None = None,
    structured: bool = True,
    enable_console: bool = True,
    max_bytes: int = 10 * 1024 * 1024,
    backup_count: int = 5,
) -> None:
    """
    Install console and file handlers on the ``app`` logger tree.

    Args:
        level: Minimum log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        log_file: Optional rotating log file; always written as JSON lines
        structured: JSON lines on the console instead of plain text
        enable_console: Write to stderr
        max_bytes: Rotation size of the log file
        backup_count: Rotated files kept

    Example:
        >>> setup_logging(level="DEBUG", log_file="./logs/speclab.log")
    """
    handlers: dict[str, dict[str, Any]] = {}
    if enable_console:
        handlers["console"] = {
            "()": StderrHandler,
            "level": level,
            "formatter": "structured" if structured else "plain",
            "filters": ["context"],
        }
    if log_file:
        Path(log_file).parent.mkdir(parents=True, exist_ok=True)
        handlers["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": level,
            "formatter": "structured",
            "filters": ["context"],
            "filename": log_file,
            "maxBytes": max_bytes,
            "backupCount": backup_count,
            "encoding": "utf-8",
        }
    names = list(handlers)

    loggers: dict[str, dict[str, Any]] = {
        "app": {"level": level, "handlers": names, "propagate": False},
    }
    for quiet in QUIET_LOGGERS:
        loggers[quiet] = {"level": "WARNING", "handlers": names, "propagate": False}

    logging.config.dictConfig(
        {
            "version": 1,
            "disable_existing_loggers": False,
            "formatters": {
                "structured": {"()": StructuredFormatter},
                "plain": {"format": PLAIN_FORMAT, "datefmt": "%Y-%m-%d %H:%M:%S"},
            },
            "filters": {"context": {"()": lambda: context_filter}},
            "handlers": handlers,
            "loggers": loggers,
            "root": {"level": "WARNING", "handlers": names},
        }
    )


def configure_from_settings(config: LoggingConfig) -> None:
    """Apply the ``LOG_`` settings section."""
    file_handler = config.get_file_handler_config() or {}
    setup_logging(
        level=config.level,
        log_file=config.file_path,
        structured=config.structured,
        enable_console=config.console_enabled,
        max_bytes=file_handler.get("maxBytes", config.max_bytes),
        backup_count=file_handler.get("backupCount", config.backup_count),
    )


def get_logger(name: str) -> logging.Logger:
    """
    Logger under the ``app`` namespace.

    Example:
        >>> get_logger("kernels").name
        'app.kernels'
    """
    if name == "app" or name.startswith("app."):
        return logging.getLogger(name)
    return logging.getLogger(f"app.{name}")


def set_context(**kwargs: Any) -> None:
    """
    Attach run context to every following record.

    Example:
        >>> set_context(run_id="3f2a", command="gen", model="rp")
    """
    context_filter.set_context(**kwargs)


def clear_context() -> None:
    context_filter.clear_context()


class LogContext:
    """Run context for the duration of a ``with`` block; the previous context is restored."""

    def __init__(self, **kwargs: Any):
        self.context: dict[str, Any] = kwargs
        self.previous_context: dict[str, Any] = {}

    def __enter__(self) -> LogContext:
        self.previous_context = context_filter.context.copy()
        context_filter.set_context(**self.context)
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_val: BaseException | None,
        exc_tb: TracebackType | None,
    ) -> None:
        context_filter.context = self.previous_context


def log_operation(
    operation: str, logger: logging.Logger | None = None
) -> Callable[[Callable[P, R]], Callable[P, R]]:
    """
    Log start, completion and failure of a use case.

    Args:
        operation: Operation name stored in the record context
        logger: Logger to use (defaults to the function's module logger)

    Example:
        >>> @log_operation("generate_spectra")
        ... def generate(spec):
        ...     pass
    """

    def decorator(func: Callable[P, R]) -> Callable[P, R]:
        @wraps(func)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
            func_logger = logger or get_logger(func.__module__)
            with LogContext(operation=operation):
                func_logger.info("Starting %s", operation)
                try:
                    result = func(*args, **kwargs)
                except Exception as e:
                    func_logger.error("Failed %s: %s", operation, e, exc_info=True)
                    raise
                func_logger.info("Completed %s", operation)
                return result

        return wrapper

    return decorator


def log_timed_operation(operation: str) -> Callable[[Callable[P, R]], Callable[P, R]]:
    """
    Like :func:`log_operation` for numerical kernels, with wall time in ``duration_s``.

    Example:
        >>> @log_timed_operation("xi_table")
        ... def build_table(config):
        ...     pass
    """

    def decorator(func: Callable[P, R]) -> Callable[P, R]:
        @wraps(func)
        def wrapper(*args: P.args, **kwargs: P.kwargs) -> R:
            logger = get_logger("kernels")
            with LogContext(operation=operation):
                logger.debug("Starting kernel %s", operation)
                start = time.perf_counter()
                try:
                    result = func(*args, **kwargs)
                except Exception as e:
                    elapsed = time.perf_counter() - start
                    logger.error(
                        "Kernel %s failed after %.3fs: %s", operation, elapsed, e, exc_info=True
                    )
                    raise
                elapsed = time.perf_counter() - start
                logger.info(
                    "Kernel %s completed in %.3fs",
                    operation,
                    elapsed,
                    extra={"duration_s": round(elapsed, 6)},
                )
                return result

        return wrapper

    return decorator


PRESETS: dict[str, dict[str, Any]] = {
    "development": {"level": "INFO", "structured": False},
    "test": {"level": "WARNING", "structured": False, "enable_console": False},
    "production": {"level": "INFO", "structured": True, "log_file": "./logs/speclab.log"},
}


def auto_configure_logging() -> None:
    """Pick a preset from the ``ENVIRONMENT`` variable (development by default)."""
    env = os.getenv("ENVIRONMENT", "development").lower()
    setup_logging(**PRESETS.get(env, PRESETS["development"]))
    get_logger(__name__).debug("Logging configured for %s environment", env)


if not logging.getLogger().handlers:
    auto_configure_logging()
