"""Run configuration: parsing, validation and overrides."""
from __future__ import annotations

import json
import os

from .errors import ConfigError
from .scenarios import ALGORITHMS, NULLABLE, scenario_defaults, scenario_ids

TOP_LEVEL = {"scenario", "overrides", "seed"}
GRAPE_VARIANTS = ("steepest_L2", "steepest_H1", "bfgs_L2", "bfgs_H1")

POSITIVE = {"dt", "duration", "max_step", "max_init_guess", "kin_factor", "waist", "delta", "J", "restart_step"}
POSITIVE_INT = {"n_points", "n_sites", "n_particles", "basis_size", "stride", "krylov_order"}
NON_NEGATIVE = {"gamma", "sigma", "beta", "min_step", "max_iterations", "g", "depth"}


def _type_ok(value, default) -> bool:
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, int):
        return isinstance(value, int) and not isinstance(value, bool)
    if isinstance(default, float):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, str)
    if isinstance(default, list):
        return isinstance(value, list)
    return True


def _check_value(key, value, path):
    if key in POSITIVE and not value > 0:
        raise ConfigError(f"{key} must be positive", path)
    if key in POSITIVE_INT and not value >= 1:
        raise ConfigError(f"{key} must be at least 1", path)
    if key in NON_NEGATIVE and not value >= 0:
        raise ConfigError(f"{key} must be non-negative", path)
    if key == "hold_steps" and value is not None and (not isinstance(value, int) or isinstance(value, bool)
                                                      or value < 0):
        raise ConfigError("hold_steps must be null or a non-negative integer", path)
    if key == "algorithms":
        for i, alg in enumerate(value):
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; choose from {', '.join(ALGORITHMS)}", f"{path}[{i}]")
    if key == "grape_variant" and value not in GRAPE_VARIANTS:
        raise ConfigError(f"unknown GRAPE variant {value!r}", path)
    if key in ("fidelity_target", "plateau") and not 0 < value < 1 + (key == "fidelity_target"):
        raise ConfigError(f"{key} out of range", path)
    if key == "max_rand" and not 0 <= value <= 0.5:
        raise ConfigError("max_rand must lie in [0, 0.5]", path)
    if key == "n_points" and value < 8:
        raise ConfigError("n_points must be at least 8", path)
    if key == "krylov_order" and value < 2:
        raise ConfigError("krylov_order must be at least 2", path)


def resolve(raw) -> tuple[str, dict]:
    """Validate a raw configuration object and merge it over the scenario defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object", "$")
    for key in raw:
        if key not in TOP_LEVEL:
            raise ConfigError(f"unknown key {key!r}", key)
    if "scenario" not in raw:
        raise ConfigError("missing scenario", "scenario")
    scenario = raw["scenario"]
    if scenario not in scenario_ids():
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(scenario_ids())}", "scenario")
    cfg = scenario_defaults(scenario)
    overrides = raw.get("overrides", {})
    if not isinstance(overrides, dict):
        raise ConfigError("overrides must be an object", "overrides")
    if "seed" in raw:
        overrides = {**overrides, "seed": raw["seed"]}
    for key, value in overrides.items():
        path = f"overrides.{key}" if key != "seed" or "seed" not in raw else "seed"
        if key not in cfg:
            raise ConfigError(f"unknown parameter {key!r} for scenario {scenario}", path)
        if value is None and key in NULLABLE:
            cfg[key] = None
            continue
        default = cfg[key]
        if default is None and key in NULLABLE:
            default = 0
        if not _type_ok(value, default):
            raise ConfigError(f"expected {type(default).__name__}, got {type(value).__name__}", path)
        if isinstance(default, float):
            value = float(value)
        _check_value(key, value, path)
        cfg[key] = value
    if cfg["seed"] < 0:
        raise ConfigError("seed must be non-negative", "seed")
    return scenario, cfg


def load_config(path) -> dict:
    path = os.fspath(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError:
        raise
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})", "$") from exc


def parse_assignment(text: str) -> tuple[str, object]:
    """``key=value`` with the value read as JSON when possible, else as a string."""
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"expected key=value, got {text!r}", "--set")
    try:
        parsed = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return key.strip(), parsed
