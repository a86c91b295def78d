import json

import pytest

from gcilab.config import parse_config, validate_config
from gcilab.errors import ConfigError
from gcilab.models import SuiteConfig


def test_defaults():
    cfg = parse_config(env={})
    assert cfg == SuiteConfig()


def test_layer_precedence(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"trials": 7, "seed": 3}), encoding="utf-8")
    env = {"GCILAB_TRIALS": "5", "GCILAB_SAMPLES": "2000", "GCILAB_SEED": "9"}

    cfg = parse_config(path, overrides={"seed": 11, "n": None}, env=env)
    assert cfg.samples == 2000  # environment
    assert cfg.trials == 7  # file beats environment
    assert cfg.seed == 11  # overrides beat everything
    assert cfg.n == SuiteConfig().n


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"trails": 7}), encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_config(path, env={})


def test_bad_values_rejected(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(overrides={"samples": 10}, env={})
    with pytest.raises(ConfigError):
        parse_config(overrides={"confidence": 1.5}, env={})
    with pytest.raises(ConfigError):
        parse_config(overrides={"suite": "nope"}, env={})
    with pytest.raises(ConfigError):
        parse_config(env={"GCILAB_N": "four"})
    with pytest.raises(ConfigError):
        parse_config(overrides={"trials": 2.5}, env={})


def test_missing_or_malformed_file(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.json", env={})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_config(bad, env={})
    listed = tmp_path / "list.json"
    listed.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(ConfigError):
        parse_config(listed, env={})


def test_validate_config_directly():
    with pytest.raises(ConfigError):
        validate_config(SuiteConfig(workers=0))
    assert validate_config(SuiteConfig(suite="chernoff")).suite == "chernoff"
