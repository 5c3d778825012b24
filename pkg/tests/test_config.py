"""Tests for the flat key=value config reader."""

import pytest

from viewgan.config import parse_kv_text
from viewgan.errors import ConfigError, DataFormatError


def test_parse_and_typed_getters():
    cfg = parse_kv_text("""
# comment
iterations = 20
alpha = 1e-3
name = run a
flag = true
""")
    assert cfg.get_int("iterations") == 20
    assert cfg.get_float("alpha") == 1e-3
    assert cfg.get_str("name") == "run a"
    assert cfg.get_bool("flag") is True
    cfg.finish()


def test_defaults_and_missing():
    cfg = parse_kv_text("a = 1\n")
    assert cfg.get_int("absent", 7) == 7
    assert cfg.get_bool("absent", False) is False
    with pytest.raises(ConfigError, match="missing required key"):
        cfg.get_str("also_absent")
    assert cfg.get_int("a") == 1


def test_type_errors_name_the_key():
    cfg = parse_kv_text("n = soon\nx = maybe\nb = 2\n")
    with pytest.raises(ConfigError, match="'n'"):
        cfg.get_int("n")
    with pytest.raises(ConfigError, match="'x'"):
        cfg.get_float("x")
    with pytest.raises(ConfigError, match="'b'"):
        cfg.get_bool("b")


def test_finish_rejects_stray_keys():
    cfg = parse_kv_text("known = 1\ntypo_key = 2\n")
    cfg.get_int("known")
    with pytest.raises(ConfigError, match="typo_key"):
        cfg.finish()


def test_malformed_lines_carry_line_numbers():
    with pytest.raises(DataFormatError) as err:
        parse_kv_text("a = 1\nno separator here\n")
    assert err.value.line == 2
    with pytest.raises(DataFormatError) as err:
        parse_kv_text("a = 1\n\na = 2\n")
    assert err.value.line == 3
