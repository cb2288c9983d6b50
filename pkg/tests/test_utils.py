"""日志格式与耗时统计"""

import json

import pytest

from ape_system.core.exceptions import ConfigValidationError
from ape_system.utils.logger import LogLevel, LogRotationConfig, get_logger, setup_logger
from ape_system.utils.monitoring import Timer, generate_performance_report, get_performance_monitor, performance_monitor


class TestLogger:

    def test_json_line_carries_fields(self, capsys):
        setup_logger(level="INFO", log_format="json")
        get_logger("tests").info("训练完成", {"phase": "pretrain", "steps": 3})
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record["logger"] == "ape_system.tests"
        assert record["phase"] == "pretrain" and record["steps"] == 3

    def test_text_fields_and_level_filter(self, capsys):
        setup_logger(level="WARNING", log_format="text")
        logger = get_logger("tests")
        logger.info("不应出现")
        logger.warning("截断", {"truncated": 2})
        err = capsys.readouterr().err
        assert "不应出现" not in err
        assert err.rstrip().endswith("| truncated=2")

    def test_log_file(self, tmp_path, capsys):
        setup_logger(log_dir=tmp_path, log_to_console=False)
        get_logger("tests").info("写文件")
        assert "写文件" in (tmp_path / "ape_system.log").read_text(encoding="utf-8")
        assert capsys.readouterr().err == ""

    def test_invalid_settings(self):
        with pytest.raises(ConfigValidationError):
            LogLevel.parse("loud")
        with pytest.raises(ConfigValidationError):
            LogRotationConfig(max_bytes=-1)


class TestMonitoring:

    def test_decorator_counts_failures(self):
        @performance_monitor("tests.flaky")
        def flaky(fail):
            if fail:
                raise ValueError("x")
            return 1

        before = get_performance_monitor().timing("tests.flaky")
        calls = before.calls if before else 0
        assert flaky(False) == 1
        with pytest.raises(ValueError):
            flaky(True)
        timing = get_performance_monitor().timing("tests.flaky")
        assert timing.calls == calls + 2
        assert timing.failures >= 1

    def test_timer_items_in_report(self):
        with Timer("tests.decode") as timer:
            timer.add_items(7)
        assert timer.elapsed >= 0
        report = generate_performance_report()
        row = next(r for r in report["operations"] if r["operation"] == "tests.decode")
        assert row["items"] >= 7
        assert report["total_calls"] >= 1
