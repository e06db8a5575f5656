"""Flat key/value scenario configuration files.

One ``key = value`` pair per line, ``#`` starts a comment, vectors are
space-separated numbers. Unknown keys are rejected so a typo in a gain name
fails loudly instead of silently running defaults.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError, ConstraintViolation, DegenerateLine, PoleSingularity
from .geometry import line_from_point_direction
from .observer import ObserverGains
from .control import ControlGains, DofMask
from .simulate import CONTROL_MODES, ScenarioConfig

_VALID_KEYS = (
    "seed",
    "cube_side",
    "duration",
    "dt",
    "alpha",
    "k1",
    "k2",
    "sigma_des_sq",
    "dof_linear",
    "dof_angular",
    "eta_init_range",
    "eta_init",
    "meas_noise_std",
    "nu_init",
    "line_point",
    "line_direction",
    "control_mode",
)


def _parse_float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {raw!r}") from None


def _parse_int(key, raw):
    try:
        return int(raw, 0)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {raw!r}") from None


def _parse_floats(key, raw, count):
    parts = raw.split()
    if len(parts) != count:
        raise ConfigError(f"{key}: expected {count} numbers, got {raw!r}")
    return tuple(_parse_float(key, p) for p in parts)


def _parse_axes(key, raw):
    tokens = raw.split()
    if tokens == ["none"]:
        return frozenset()
    for tok in tokens:
        if tok not in ("x", "y", "z"):
            raise ConfigError(f"{key}: axes must be x/y/z or 'none', got {tok!r}")
    return frozenset(tokens)


def parse_config_text(text: str) -> ScenarioConfig:
    """Parse configuration text into a ScenarioConfig.

    Raises:
        ConfigError: on syntax errors, unknown or duplicate keys, or values
            the scenario types reject.
    """
    values: dict = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in _VALID_KEYS:
            raise ConfigError(
                f"line {lineno}: unknown key {key!r} (valid keys: {', '.join(_VALID_KEYS)})"
            )
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        if not raw_value:
            raise ConfigError(f"line {lineno}: empty value for {key!r}")
        values[key] = raw_value

    kwargs: dict = {}
    if "seed" in values:
        kwargs["seed"] = _parse_int("seed", values["seed"])
    for key in ("cube_side", "duration", "dt", "eta_init_range", "meas_noise_std"):
        if key in values:
            kwargs[key] = _parse_float(key, values[key])
    if "nu_init" in values:
        kwargs["nu_init"] = _parse_floats("nu_init", values["nu_init"], 3)
    if "eta_init" in values:
        kwargs["eta_init"] = _parse_floats("eta_init", values["eta_init"], 2)
    if "control_mode" in values:
        mode = values["control_mode"]
        if mode not in CONTROL_MODES:
            raise ConfigError(f"control_mode: must be one of {CONTROL_MODES}, got {mode!r}")
        kwargs["control_mode"] = mode

    try:
        kwargs["observer_gains"] = ObserverGains(
            alpha=_parse_float("alpha", values["alpha"]) if "alpha" in values else 2000.0
        )
        kwargs["control_gains"] = ControlGains(
            k1=_parse_float("k1", values["k1"]) if "k1" in values else 1.0,
            k2=_parse_float("k2", values["k2"]) if "k2" in values else 1.0,
            sigma_des_sq=(
                _parse_floats("sigma_des_sq", values["sigma_des_sq"], 2)
                if "sigma_des_sq" in values
                else (0.08, 0.18)
            ),
        )
        kwargs["dof_mask"] = DofMask(
            linear_axes=(
                _parse_axes("dof_linear", values["dof_linear"])
                if "dof_linear" in values
                else frozenset("xyz")
            ),
            angular_axes=(
                _parse_axes("dof_angular", values["dof_angular"])
                if "dof_angular" in values
                else frozenset("xyz")
            ),
        )
        if ("line_point" in values) != ("line_direction" in values):
            raise ConfigError("line_point and line_direction must be given together")
        if "line_point" in values:
            kwargs["line_override"] = line_from_point_direction(
                _parse_floats("line_point", values["line_point"], 3),
                _parse_floats("line_direction", values["line_direction"], 3),
            )
        return ScenarioConfig(**kwargs)
    except ConfigError:
        raise
    except (ConstraintViolation, DegenerateLine, PoleSingularity) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ScenarioConfig:
    """Read and parse a configuration file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)
