"""Scenario configuration: TOML loading, validation, and sequence descriptors.

Time-varying scenario inputs (demand coefficient, capacity) are given either as
a constant scalar, an explicit per-step list, or a formula descriptor:

    {"formula": "constant", "value": v}
    {"formula": "piecewise-linear", "points": [[t0, v0], [t1, v1], ...]}
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Optional, Union

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


class ConfigError(ValueError):
    """Invalid or inconsistent configuration input."""


SequenceSpec = Union[int, float, list, dict]

# The fleet scenario's default demand profile: a hump peaking mid-horizon.
DEFAULT_GAMMA_SPEC = {"formula": "piecewise-linear",
                      "points": [[0, 0.5], [50, 1.0], [100, 0.5]]}

CONSTANTS_MODES = ("derived", "stated")
PRICE_SOURCES = ("synthetic", "file")


def sequence_from_spec(spec: SequenceSpec, length: int) -> np.ndarray:
    """Materialize a sequence descriptor into a float array of the given length."""
    if length < 1:
        raise ConfigError("sequence length must be >= 1")
    if isinstance(spec, bool):
        raise ConfigError("sequence spec cannot be a boolean")
    if isinstance(spec, (int, float)):
        return np.full(length, float(spec))
    if isinstance(spec, (list, tuple, np.ndarray)):
        arr = np.asarray(spec, dtype=float)
        if arr.ndim != 1:
            raise ConfigError("explicit sequence must be 1-D")
        if arr.size < length:
            raise ConfigError(
                f"explicit sequence has {arr.size} entries, need at least {length}")
        return arr[:length].copy()
    if isinstance(spec, dict):
        formula = spec.get("formula")
        if formula == "constant":
            if "value" not in spec:
                raise ConfigError("constant formula requires a 'value' key")
            return np.full(length, float(spec["value"]))
        if formula == "piecewise-linear":
            points = spec.get("points")
            if not points or len(points) < 2:
                raise ConfigError("piecewise-linear formula needs >= 2 [t, value] points")
            pts = np.asarray(points, dtype=float)
            if pts.ndim != 2 or pts.shape[1] != 2:
                raise ConfigError("points must be [t, value] pairs")
            ts, vs = pts[:, 0], pts[:, 1]
            if np.any(np.diff(ts) <= 0):
                raise ConfigError("piecewise-linear knots must be strictly increasing in t")
            return np.interp(np.arange(length, dtype=float), ts, vs)
        raise ConfigError(f"unknown formula {formula!r}")
    raise ConfigError(f"unsupported sequence spec of type {type(spec).__name__}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Full description of one fleet-charging experiment."""

    stations: int = 10
    horizon: int = 100
    capacity: SequenceSpec = 10.0
    kappa: float = 2.0
    gamma: SequenceSpec = field(default_factory=lambda: dict(DEFAULT_GAMMA_SPEC))
    sigma: float = 1.0
    price_source: str = "synthetic"
    price_path: Optional[str] = None
    eta: float = 0.3
    x0_radius: float = 5.0
    replications: int = 1000
    batch_size: int = 10
    seed: int = 0
    workers: int = 1
    constants_mode: str = "derived"
    delta: float = 0.1
    theta: float = 0.5
    check_stable_points: bool = True
    keep_iterates: bool = False

    def __post_init__(self):
        if self.stations < 1:
            raise ConfigError("stations must be >= 1")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        for name in ("kappa", "sigma", "eta", "x0_radius"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.replications < 1:
            raise ConfigError("replications must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.constants_mode not in CONSTANTS_MODES:
            raise ConfigError(f"constants_mode must be one of {CONSTANTS_MODES}")
        if self.price_source not in PRICE_SOURCES:
            raise ConfigError(f"price_source must be one of {PRICE_SOURCES}")
        if self.price_source == "file" and not self.price_path:
            raise ConfigError("price_source 'file' requires price_path")
        if not 0.0 < self.delta < 1.0:
            raise ConfigError("delta must lie in (0, 1)")
        if not self.theta > 0:
            raise ConfigError("theta must be positive")
        # Materialize once to surface malformed descriptors at load time.
        sequence_from_spec(self.gamma, self.horizon)
        capacities = sequence_from_spec(self.capacity, self.horizon)
        if np.any(capacities <= 0):
            raise ConfigError("capacity must be positive at every step")

    def to_dict(self) -> dict:
        return asdict(self)


# TOML section -> config field mapping; unknown keys are rejected to catch typos.
_SECTION_FIELDS = {
    "scenario": ("stations", "horizon", "capacity", "kappa", "gamma", "sigma",
                 "constants_mode"),
    "prices": ("source", "path"),
    "run": ("eta", "x0_radius", "replications", "batch_size", "seed", "workers",
            "delta", "theta", "check_stable_points", "keep_iterates"),
}


def scenario_from_dict(raw: dict) -> ScenarioConfig:
    """Build a ScenarioConfig from a parsed TOML document."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table")
    unknown_sections = set(raw) - set(_SECTION_FIELDS)
    if unknown_sections:
        raise ConfigError(f"unknown config sections: {sorted(unknown_sections)}")
    kwargs: dict = {}
    for section, allowed in _SECTION_FIELDS.items():
        body = raw.get(section, {})
        if not isinstance(body, dict):
            raise ConfigError(f"section [{section}] must be a table")
        unknown = set(body) - set(allowed)
        if unknown:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(unknown)}")
        for key, value in body.items():
            if section == "prices":
                kwargs["price_source" if key == "source" else "price_path"] = value
            else:
                kwargs[key] = value
    try:
        return ScenarioConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def load_scenario(path) -> ScenarioConfig:
    """Parse a TOML scenario file."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML in {path}: {exc}") from exc
    return scenario_from_dict(raw)
