"""
Structured Logging Module

Key/value logging for the numerical pipeline. Records go to stderr so the
JSON reports printed on stdout stay machine-readable.
"""

import json
import logging
import sys
import threading
from contextlib import contextmanager
from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from functools import wraps
from pathlib import Path
from typing import Any, Callable, Iterator, TypeVar

F = TypeVar('F', bound=Callable[..., Any])

TEXT_FORMAT = (
    "%(asctime)s | %(levelname)-8s | %(name)s | "
    "%(module)s:%(funcName)s:%(lineno)d | %(message)s"
)

_RESERVED = {
    'name', 'msg', 'args', 'levelname', 'levelno', 'pathname', 'filename',
    'module', 'lineno', 'funcName', 'created', 'msecs', 'relativeCreated',
    'thread', 'threadName', 'processName', 'process', 'getMessage',
    'exc_info', 'exc_text', 'stack_info', 'taskName',
}


class LogLevel(Enum):
    """Log levels aligned with standard logging."""
    DEBUG = logging.DEBUG
    INFO = logging.INFO
    WARNING = logging.WARNING
    ERROR = logging.ERROR
    CRITICAL = logging.CRITICAL

    @classmethod
    def from_name(cls, name: str) -> 'LogLevel':
        """Parse a case-insensitive level name ("debug", "WARNING", ...)."""
        try:
            return cls[name.strip().upper()]
        except KeyError:
            raise ValueError(
                f"Unknown log level {name!r}; expected one of "
                f"{', '.join(m.name.lower() for m in cls)}"
            ) from None


@dataclass(frozen=True)
class LogContext:
    """Fields attached to every record emitted inside a `context()` block."""
    extra: dict[str, Any] = field(default_factory=dict)

    def merged(self, **fields: Any) -> 'LogContext':
        return LogContext(extra={**self.extra, **fields})


EMPTY_CONTEXT = LogContext()


class JSONFormatter(logging.Formatter):
    """One JSON object per record, extra fields inlined."""

    def format(self, record: logging.LogRecord) -> str:
        log_data: dict[str, Any] = {
            "timestamp": datetime.fromtimestamp(record.created).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "function": record.funcName,
            "line": record.lineno,
        }
        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        for key, value in record.__dict__.items():
            if key not in _RESERVED:
                log_data[key] = value

        return json.dumps(log_data, default=str)


def _build_formatter(json_format: bool) -> logging.Formatter:
    if json_format:
        return JSONFormatter()
    return logging.Formatter(TEXT_FORMAT, datefmt="%Y-%m-%d %H:%M:%S")


def _level_value(level: LogLevel | int) -> int:
    return level.value if isinstance(level, LogLevel) else level


class StructuredLogger:
    """
    Named logger accepting structured keyword fields.

    One instance per name (singleton), wrapping the stdlib logger of the same
    name so handlers configured globally apply.
    """

    _instances: dict[str, 'StructuredLogger'] = {}

    def __new__(cls, name: str) -> 'StructuredLogger':
        if name not in cls._instances:
            cls._instances[name] = super().__new__(cls)
        return cls._instances[name]

    def __init__(self, name: str):
        if hasattr(self, '_initialized'):
            return
        self.name = name
        self._logger = logging.getLogger(name)
        # per-thread so concurrent sweep rows keep their own fields
        self._local = threading.local()
        self._initialized = True

    @property
    def _context(self) -> LogContext:
        return getattr(self._local, "context", EMPTY_CONTEXT)

    @_context.setter
    def _context(self, value: LogContext) -> None:
        self._local.context = value

    def configure(
        self,
        level: LogLevel | int = LogLevel.INFO,
        json_format: bool = False,
        output_file: Path | None = None
    ) -> None:
        """Attach dedicated handlers to this logger only."""
        self._logger.handlers.clear()
        log_level = _level_value(level)
        self._logger.setLevel(log_level)
        formatter = _build_formatter(json_format)

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(log_level)
        console_handler.setFormatter(formatter)
        self._logger.addHandler(console_handler)

        if output_file:
            file_handler = logging.FileHandler(output_file)
            file_handler.setLevel(log_level)
            file_handler.setFormatter(formatter)
            self._logger.addHandler(file_handler)

    @contextmanager
    def context(self, **fields: Any) -> Iterator[None]:
        """
        Temporarily attach fields to every record.

        Usage:
            with logger.context(epsilon=0.01, model="fhn"):
                logger.info("row started")
        """
        previous = self._context
        self._context = previous.merged(**fields)
        try:
            yield
        finally:
            self._context = previous

    def is_enabled_for(self, level: LogLevel) -> bool:
        return self._logger.isEnabledFor(level.value)

    def _log(self, level: LogLevel, message: str, **extra: Any) -> None:
        if not self._logger.isEnabledFor(level.value):
            return
        fields = {**self._context.extra, **extra}
        # stacklevel=3 reports the caller of debug()/info(), not this helper
        self._logger.log(level.value, message, extra=fields, stacklevel=3)

    def debug(self, message: str, **extra: Any) -> None:
        self._log(LogLevel.DEBUG, message, **extra)

    def info(self, message: str, **extra: Any) -> None:
        self._log(LogLevel.INFO, message, **extra)

    def warning(self, message: str, **extra: Any) -> None:
        self._log(LogLevel.WARNING, message, **extra)

    def error(self, message: str, **extra: Any) -> None:
        self._log(LogLevel.ERROR, message, **extra)

    def critical(self, message: str, **extra: Any) -> None:
        self._log(LogLevel.CRITICAL, message, **extra)

    def exception(self, message: str, **extra: Any) -> None:
        """Log at ERROR with the active exception's traceback."""
        self._logger.exception(message, extra={**self._context.extra, **extra})


def get_logger(name: str) -> StructuredLogger:
    """Get or create the structured logger for a module name."""
    return StructuredLogger(name)


def log_execution(
    logger: StructuredLogger | None = None,
    level: LogLevel = LogLevel.DEBUG,
    log_result: bool = False,
    log_errors: bool = True
) -> Callable[[F], F]:
    """
    Trace entry and exit of a pipeline stage.

    Usage:
        @log_execution(level=LogLevel.INFO)
        def locate_hopf(...): ...
    """
    def decorator(func: F) -> F:
        @wraps(func)
        def wrapper(*args: Any, **kwargs: Any) -> Any:
            nonlocal logger
            if logger is None:
                logger = get_logger(func.__module__)

            func_name = f"{func.__module__}.{func.__qualname__}"
            logger._log(level, f"-> {func_name}")
            try:
                result = func(*args, **kwargs)
            except Exception as e:
                if log_errors:
                    logger.error(
                        f"x {func_name}: {e}",
                        error_type=type(e).__name__
                    )
                raise

            exit_data = {'result': str(result)} if log_result else {}
            logger._log(level, f"<- {func_name}", **exit_data)
            return result

        return wrapper  # type: ignore[return-value]
    return decorator


def configure_global_logging(
    level: LogLevel | int = LogLevel.WARNING,
    json_format: bool = False,
    log_file: Path | None = None
) -> None:
    """Configure the root logger once for the whole process."""
    root_logger = logging.getLogger()
    log_level = _level_value(level)
    root_logger.setLevel(log_level)
    root_logger.handlers.clear()
    formatter = _build_formatter(json_format)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(log_level)
    console_handler.setFormatter(formatter)
    root_logger.addHandler(console_handler)

    if log_file:
        log_file.parent.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(log_level)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)
