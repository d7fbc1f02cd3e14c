import math
import os

import pytest

from mdlab.config import (
    ConfigError,
    config_hash,
    evaluate_expression,
    read_config,
    schedule_from_mapping,
)


class TestExpressions:
    def test_numbers_and_arithmetic(self):
        assert evaluate_expression("1 + 2*3 - 4/8") == pytest.approx(6.5)
        assert evaluate_expression("-(2 + 3) * 2") == -10
        assert evaluate_expression("1e-2 + .5") == pytest.approx(0.51)

    def test_functions(self):
        assert evaluate_expression("pow(2, 10)") == 1024
        assert evaluate_expression("log(T)", {"T": math.e ** 2}) == pytest.approx(2.0)
        assert evaluate_expression("pow(log(T), -2)", {"T": 1e4}) == pytest.approx(
            math.log(1e4) ** -2
        )

    def test_identifiers(self):
        assert evaluate_expression("T/2", {"T": 10}) == 5

    def test_errors(self):
        with pytest.raises(ConfigError):
            evaluate_expression("unknown_var")
        with pytest.raises(ConfigError):
            evaluate_expression("pow(1)")
        with pytest.raises(ConfigError):
            evaluate_expression("1 + ")
        with pytest.raises(ConfigError):
            evaluate_expression("sin(1)")
        with pytest.raises(ConfigError):
            evaluate_expression("2 ** 3")


class TestScheduleLoading:
    def test_plain(self):
        s = schedule_from_mapping({"a": "0.01", "b": "0.1", "c": "0.4", "T": "10000"})
        assert (s.a, s.b, s.c, s.T) == (0.01, 0.1, 0.4, 10000.0)
        assert s.zeta == 1.0

    def test_expression_referencing_T(self):
        s = schedule_from_mapping(
            {"a": "pow(log(T), -2)", "b": "0.1", "c": "0.4", "T": "10000"}
        )
        assert s.a == pytest.approx(math.log(1e4) ** -2)

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            schedule_from_mapping({"a": "0.1", "b": "0.2", "c": "0.4", "T": "10", "bogus": "1"})

    def test_missing_key(self):
        with pytest.raises(ConfigError):
            schedule_from_mapping({"a": "0.1", "b": "0.2", "T": "10"})


class TestConfigFile:
    def test_sections_and_env_override(self, tmp_path, monkeypatch):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("[levelset]\nn = 1000\nseed = 3\n\n[schedule]\na = 0.01\n")
        sections = read_config(str(cfg))
        assert sections["levelset"]["n"] == "1000"
        monkeypatch.setenv("MDLAB_LEVELSET_N", "2000")
        sections = read_config(str(cfg))
        assert sections["levelset"]["n"] == "2000"

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            read_config("/nonexistent/path.cfg")


def test_config_hash_stable():
    h1 = config_hash({"b": 1, "a": [1, 2]})
    h2 = config_hash({"a": [1, 2], "b": 1})
    assert h1 == h2 and len(h1) == 16
    assert config_hash({"a": [1, 2], "b": 2}) != h1
