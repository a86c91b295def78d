from __future__ import annotations

import json
import os
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from .errors import ConfigError
from .models import METHODS, SUITES, SuiteConfig

ENV_PREFIX = "GCILAB_"


def _coerce(name: str, value: Any, kind: type) -> Any:
    try:
        if kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise ValueError(value)
            return int(value)
        if kind is float:
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be {kind.__name__}, got {value!r}") from None


def _field_types() -> Dict[str, type]:
    defaults = asdict(SuiteConfig())
    return {f.name: type(defaults[f.name]) for f in fields(SuiteConfig)}


def _merge(values: Dict[str, Any], source: Mapping[str, Any], origin: str) -> None:
    types = _field_types()
    for key, value in source.items():
        if key not in types:
            raise ConfigError(f"unknown config key {key!r} in {origin}")
        if value is None:
            continue
        values[key] = _coerce(key, value, types[key])


def validate_config(cfg: SuiteConfig) -> SuiteConfig:
    """
    Range checks:
    - suite is a known suite, method a known method
    - n, trials, workers >= 1; samples >= 100; 0 < confidence < 1
    """
    if cfg.suite not in SUITES:
        raise ConfigError(f"suite must be one of {SUITES}, got {cfg.suite!r}")
    if cfg.method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {cfg.method!r}")
    if cfg.n < 1:
        raise ConfigError(f"n must be >= 1, got {cfg.n}")
    if cfg.trials < 1:
        raise ConfigError(f"trials must be >= 1, got {cfg.trials}")
    if cfg.samples < 100:
        raise ConfigError(f"samples must be >= 100, got {cfg.samples}")
    if not (0.0 < cfg.confidence < 1.0):
        raise ConfigError(f"confidence must be in (0, 1), got {cfg.confidence}")
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.workers}")
    if not cfg.output:
        raise ConfigError("output must be a non-empty path")
    return cfg


def parse_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    env: Optional[Mapping[str, str]] = None,
) -> SuiteConfig:
    """
    Layered suite configuration: defaults < GCILAB_<FIELD> environment variables < JSON file
    < explicit overrides (None values in overrides are ignored).
    """
    env = os.environ if env is None else env
    values = asdict(SuiteConfig())

    from_env = {
        name: env[ENV_PREFIX + name.upper()]
        for name in values
        if ENV_PREFIX + name.upper() in env
    }
    _merge(values, from_env, "environment")

    if path is not None:
        p = Path(path)
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {p}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"malformed config file {p}: {e}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config file {p} must hold a JSON object")
        _merge(values, data, str(p))

    _merge(values, overrides or {}, "overrides")
    return validate_config(SuiteConfig(**values))
