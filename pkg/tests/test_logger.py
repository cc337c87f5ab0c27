"""
Unit Tests for Structured Logging Module

Tests formatters, the per-thread context, the log_execution decorator and
global configuration.
"""

import json
import logging
import sys
import threading
from pathlib import Path

import pytest

# Add lib directory to path
lib_dir = Path(__file__).parent.parent / "lib"
sys.path.insert(0, str(lib_dir))

from logger import (
    JSONFormatter,
    LogContext,
    LogLevel,
    StructuredLogger,
    configure_global_logging,
    get_logger,
    log_execution,
)


def make_record(msg: str = "message", level: int = logging.INFO, exc_info=None) -> logging.LogRecord:
    return logging.LogRecord(
        name="test", level=level, pathname="test.py", lineno=10, msg=msg, args=(), exc_info=exc_info
    )


class TestLogLevel:
    """LogLevel enum and name parsing."""

    @pytest.mark.unit
    def test_values_align_with_stdlib(self):
        assert LogLevel.DEBUG.value == logging.DEBUG
        assert LogLevel.WARNING.value == logging.WARNING
        assert LogLevel.CRITICAL.value == logging.CRITICAL

    @pytest.mark.unit
    @pytest.mark.parametrize("name,level", [("debug", LogLevel.DEBUG), (" Warning ", LogLevel.WARNING)])
    def test_from_name(self, name, level):
        assert LogLevel.from_name(name) is level

    @pytest.mark.unit
    def test_unknown_name(self):
        with pytest.raises(ValueError, match="Unknown log level"):
            LogLevel.from_name("verbose")


class TestLogContext:
    """Immutable context fields."""

    @pytest.mark.unit
    def test_merged_returns_new_context(self):
        base = LogContext(extra={"model": "vdp"})
        merged = base.merged(epsilon=0.01)
        assert merged.extra == {"model": "vdp", "epsilon": 0.01}
        assert base.extra == {"model": "vdp"}

    @pytest.mark.unit
    def test_frozen(self):
        from dataclasses import FrozenInstanceError

        with pytest.raises(FrozenInstanceError):
            LogContext().extra = {}  # type: ignore[misc]


class TestJSONFormatter:
    """One JSON object per record."""

    @pytest.mark.unit
    def test_basic_fields(self):
        data = json.loads(JSONFormatter().format(make_record("Hopf located")))
        assert data["level"] == "INFO"
        assert data["message"] == "Hopf located"
        assert "timestamp" in data

    @pytest.mark.unit
    def test_extra_fields_inlined(self):
        record = make_record()
        record.lambda_c = -0.0065
        data = json.loads(JSONFormatter().format(record))
        assert data["lambda_c"] == -0.0065

    @pytest.mark.unit
    def test_non_json_values_stringified(self):
        record = make_record()
        record.eigenvalue = 0.2j
        data = json.loads(JSONFormatter().format(record))
        assert data["eigenvalue"] == "0.2j"

    @pytest.mark.unit
    def test_exception(self):
        try:
            raise ValueError("bad bracket")
        except ValueError:
            exc_info = sys.exc_info()
        data = json.loads(JSONFormatter().format(make_record("failed", logging.ERROR, exc_info)))
        assert "ValueError" in data["exception"]


class TestStructuredLogger:
    """Singleton loggers with structured fields."""

    @pytest.mark.unit
    def test_singleton_per_name(self):
        assert StructuredLogger("test") is StructuredLogger("test")
        assert get_logger("test") is not get_logger("other")

    @pytest.mark.unit
    def test_configure_with_file(self, tmp_path):
        log_file = tmp_path / "test.log"
        logger = StructuredLogger("test_file")
        logger.configure(level=LogLevel.INFO, output_file=log_file)
        logger.info("Oracle orientation", below="left")
        assert "Oracle orientation" in log_file.read_text()

    @pytest.mark.unit
    def test_extra_fields_reach_record(self, caplog):
        logger = StructuredLogger("test_extra")
        logger.configure(level=LogLevel.INFO)
        with caplog.at_level(logging.INFO):
            logger.info("Canard explosion located", lambda_c=-0.0065, width=1e-9)
        record = next(r for r in caplog.records if r.message == "Canard explosion located")
        assert record.lambda_c == -0.0065
        assert record.width == 1e-9

    @pytest.mark.unit
    def test_disabled_level_is_skipped(self, caplog):
        logger = StructuredLogger("test_disabled")
        logger.configure(level=LogLevel.WARNING)
        logger.debug("hidden")
        assert not any(r.message == "hidden" for r in caplog.records)
        assert not logger.is_enabled_for(LogLevel.DEBUG)

    @pytest.mark.unit
    def test_context_is_applied_and_restored(self, caplog):
        logger = StructuredLogger("test_context")
        logger.configure(level=LogLevel.INFO)
        with caplog.at_level(logging.INFO):
            with logger.context(model="fhn"):
                with logger.context(epsilon=0.001):
                    assert logger._context.extra == {"model": "fhn", "epsilon": 0.001}
                    logger.info("row started")
                assert logger._context.extra == {"model": "fhn"}
        assert logger._context.extra == {}
        record = next(r for r in caplog.records if r.message == "row started")
        assert (record.model, record.epsilon) == ("fhn", 0.001)

    @pytest.mark.unit
    def test_context_is_per_thread(self):
        logger = StructuredLogger("test_threads")
        seen: dict[str, dict] = {}
        barrier = threading.Barrier(2)

        def worker(eps: float) -> None:
            with logger.context(epsilon=eps):
                barrier.wait()
                seen[str(eps)] = dict(logger._context.extra)

        threads = [threading.Thread(target=worker, args=(eps,)) for eps in (0.01, 0.02)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert seen == {"0.01": {"epsilon": 0.01}, "0.02": {"epsilon": 0.02}}
        assert logger._context.extra == {}


class TestLogExecutionDecorator:
    """Entry/exit tracing of pipeline stages."""

    @pytest.mark.unit
    def test_success(self, caplog):
        logger = StructuredLogger("test_decorator")
        logger.configure(level=LogLevel.DEBUG)

        @log_execution(logger=logger, level=LogLevel.DEBUG)
        def add(a: int, b: int) -> int:
            return a + b

        with caplog.at_level(logging.DEBUG):
            assert add(2, 3) == 5
        messages = [r.message for r in caplog.records]
        assert any(m.startswith("-> ") and m.endswith("add") for m in messages)
        assert any(m.startswith("<- ") and m.endswith("add") for m in messages)

    @pytest.mark.unit
    def test_result_logged_on_request(self, caplog):
        logger = StructuredLogger("test_result")
        logger.configure(level=LogLevel.DEBUG)

        @log_execution(logger=logger, log_result=True)
        def halve(x: float) -> float:
            return x / 2

        with caplog.at_level(logging.DEBUG):
            halve(3.0)
        assert any(getattr(r, "result", None) == "1.5" for r in caplog.records)

    @pytest.mark.unit
    def test_exception_logged_and_reraised(self, caplog):
        logger = StructuredLogger("test_exception")
        logger.configure(level=LogLevel.ERROR)

        @log_execution(logger=logger)
        def failing() -> None:
            raise ValueError("bracket reversed")

        with caplog.at_level(logging.ERROR):
            with pytest.raises(ValueError):
                failing()
        record = next(r for r in caplog.records if r.levelno == logging.ERROR)
        assert "bracket reversed" in record.message
        assert record.error_type == "ValueError"

    @pytest.mark.unit
    def test_defaults_to_module_logger(self, caplog):
        @log_execution(level=LogLevel.INFO)
        def double(x: int) -> int:
            return x * 2

        with caplog.at_level(logging.INFO):
            assert double(5) == 10
        assert any(r.name == __name__ for r in caplog.records)


class TestConfigureGlobalLogging:
    """Root logger configuration."""

    @pytest.mark.unit
    def test_level(self):
        configure_global_logging(level=LogLevel.INFO)
        assert logging.getLogger().level == logging.INFO

    @pytest.mark.unit
    def test_file_created_with_parents(self, tmp_path):
        log_file = tmp_path / "logs" / "global.log"
        configure_global_logging(level=LogLevel.INFO, log_file=log_file)
        logging.getLogger("test").info("Global test message")
        assert "Global test message" in log_file.read_text()

    @pytest.mark.unit
    def test_json_format(self, tmp_path):
        log_file = tmp_path / "global_json.log"
        configure_global_logging(level=LogLevel.INFO, json_format=True, log_file=log_file)
        logging.getLogger("test_json").info("JSON test")
        data = json.loads(log_file.read_text().strip())
        assert data["message"] == "JSON test"


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
