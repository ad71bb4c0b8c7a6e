"""Sweep configuration: a TOML file of scalar settings plus a ``[grid]`` table.

Example::

    trials = 5000
    seed = 3

    [grid]
    epsilon = [0.1, 0.5, 0.9]
    L_q = [20, 100]
    R = [1, "1/2"]
    n = 10

Every grid entry may be a scalar or a list; rationals may be written as
strings such as ``"1/2"``.  Flags given on the command line override file
values.
"""

from __future__ import annotations

import itertools
import sys
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .harness import ConfigError, ExperimentConfig

SCALAR_KEYS = {
    "N": int, "alpha": float, "L_doc": int, "l_s": int, "trials": int, "Q": int, "seed": int,
    "target_se": float, "max_samples": int, "mode": str, "scorer": str, "embed_dim": int,
}
GRID_KEYS = {"epsilon": float, "L_q": int, "R": float, "n": int}
GRID_DEFAULTS = {"epsilon": (0.5,), "L_q": (100,), "R": (1.0,), "n": (10,)}
FORMATS = ("csv", "json")


def _coerce(key: str, value: Any, kind: type):
    if isinstance(value, bool):
        raise ConfigError(key, f"expected {kind.__name__}, got a boolean")
    try:
        if kind is str:
            if not isinstance(value, str):
                raise TypeError
            return value
        if isinstance(value, str):
            value = Fraction(value.strip())
        if kind is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            if isinstance(value, Fraction) and value.denominator != 1:
                raise ValueError
            return int(value)
        return float(value)
    except (TypeError, ValueError, ZeroDivisionError):
        raise ConfigError(key, f"expected {kind.__name__}, got {value!r}") from None


@dataclass(frozen=True)
class SweepSpec:
    base: ExperimentConfig
    grid: Mapping[str, tuple]
    out: Path | None = None
    format: str = "csv"

    @property
    def groups(self) -> list[ExperimentConfig]:
        """One configuration per (n, L_q, R) carrying the whole epsilon grid."""
        return [replace(self.base, n=n, L_q=L_q, R=R, epsilons=tuple(self.grid["epsilon"]))
                for n, L_q, R in itertools.product(self.grid["n"], self.grid["L_q"], self.grid["R"])]

    @property
    def cells(self) -> list[ExperimentConfig]:
        """One configuration per (epsilon, L_q, R, n) cell."""
        return [replace(g, epsilons=(e,)) for g in self.groups for e in g.epsilons]


def build_spec(settings: Mapping[str, Any], grid: Mapping[str, Any] | None = None,
               out: str | Path | None = None, format: str = "csv") -> SweepSpec:
    """Validate settings and grid values; every error names the offending key."""
    base = {}
    for key, value in settings.items():
        if key not in SCALAR_KEYS:
            raise ConfigError(key, "unknown setting")
        base[key] = _coerce(key, value, SCALAR_KEYS[key])
    axes = dict(GRID_DEFAULTS)
    for key, value in (grid or {}).items():
        if key not in GRID_KEYS:
            raise ConfigError(key, "unknown grid axis")
        values = value if isinstance(value, (list, tuple)) else [value]
        if not values:
            raise ConfigError(key, "grid axis is empty")
        coerced = tuple(_coerce(key, v, GRID_KEYS[key]) for v in values)
        if len(set(coerced)) != len(coerced):
            raise ConfigError(key, "grid axis has duplicate values")
        axes[key] = coerced
    if format not in FORMATS:
        raise ConfigError("format", f"must be one of {FORMATS}, got {format!r}")
    base_cfg = ExperimentConfig(**base)
    spec = SweepSpec(base_cfg, axes, Path(out) if out is not None else None, format)
    for axis in ("n", "L_q", "R"):
        for value in axes[axis]:
            replace(base_cfg, **{axis: value})  # runs validation, names the axis
    replace(base_cfg, epsilons=axes["epsilon"])
    return spec


def load_config(path: str | Path) -> tuple[dict, dict]:
    """Read a TOML config into (scalar settings, grid)."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}") from None
    grid = data.pop("grid", {})
    if not isinstance(grid, dict):
        raise ConfigError("grid", "must be a table")
    for key, value in data.items():
        if isinstance(value, dict):
            raise ConfigError(key, "unknown table")
    return data, grid


def parse_config(path: str | Path | None = None, overrides: Mapping[str, Any] | None = None,
                 out: str | Path | None = None, format: str = "csv") -> SweepSpec:
    """Spec from an optional config file, with ``overrides`` (flags) taking precedence."""
    settings, grid = load_config(path) if path is not None else ({}, {})
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in GRID_KEYS:
            grid[key] = value
        else:
            settings[key] = value
    return build_spec(settings, grid, out, format)
