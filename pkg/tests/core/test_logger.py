"""Unit tests for logging module."""

from __future__ import annotations

import json
import logging
import re
from pathlib import Path

import pytest

from core.logger import bind_context, get_logger, setup_logging


def _read_text(path: Path) -> str:
    return path.read_text(encoding="utf-8")


def test_default_logging_level_is_info() -> None:
    setup_logging({})

    assert logging.getLogger().level == logging.INFO


def test_default_log_format(tmp_path: Path) -> None:
    log_file = tmp_path / "format.log"
    setup_logging({"file_path": str(log_file)})

    get_logger("core.optimizer").info("descent finished")

    content = _read_text(log_file).strip()
    pattern = re.compile(r"^\[.+\] \[INFO\] \[core\.optimizer\] descent finished$")
    assert pattern.match(content) is not None


def test_level_filtering(tmp_path: Path) -> None:
    log_file = tmp_path / "filter.log"
    setup_logging({"level": "WARNING", "file_path": str(log_file)})

    logger = get_logger("core.lyapunov")
    logger.debug("iterate accepted")
    logger.warning("Lyapunov residual above tolerance")

    content = _read_text(log_file)
    assert "iterate accepted" not in content
    assert "residual above tolerance" in content


def test_unknown_level_name_falls_back_to_info() -> None:
    setup_logging({"level": "chatty"})

    assert logging.getLogger().level == logging.INFO


def test_repeated_setup_does_not_stack_handlers() -> None:
    setup_logging({})
    setup_logging({})

    assert len(logging.getLogger().handlers) == 1


def test_console_handler_outputs_logs(capsys: pytest.CaptureFixture[str]) -> None:
    setup_logging({"level": "INFO"})

    get_logger("core.runner").info("case finished")
    captured = capsys.readouterr()

    assert "case finished" in (captured.err + captured.out)


def test_json_format_keeps_numeric_extras(tmp_path: Path) -> None:
    log_file = tmp_path / "json.log"
    setup_logging({"level": "DEBUG", "file_path": str(log_file), "json_format": True})

    get_logger("core.optimizer").debug(
        "iterate accepted",
        extra={"iteration": 3, "jf": 53.77, "step": 0.09, "backtracks": 2},
    )

    record = json.loads(_read_text(log_file).strip())
    assert record["level"] == "DEBUG"
    assert record["name"] == "core.optimizer"
    assert record["message"] == "iterate accepted"
    assert record["iteration"] == 3
    assert record["jf"] == pytest.approx(53.77)
    assert record["backtracks"] == 2
    assert "timestamp" in record


def test_bound_context_is_merged_into_records(tmp_path: Path) -> None:
    log_file = tmp_path / "context.log"
    setup_logging({"file_path": str(log_file), "json_format": True})

    log = bind_context(get_logger("core.runner"), case="case1-hom")
    log.info("case finished", extra={"iterations": 12})

    record = json.loads(_read_text(log_file).strip())
    assert record["case"] == "case1-hom"
    assert record["iterations"] == 12
