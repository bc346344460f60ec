"""Scenario configuration, YAML (de)serialization and the built-in preset."""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .channel import RbGrid
from .scheduler import APP_AWARE, FRAME, POLICIES, RATE_UPDATES
from .utility import Logarithmic, Sigmoidal, UtilityFunction

PAPER_UTILITIES = (
    Sigmoidal(a=5.0, b=10.0),
    Sigmoidal(a=3.0, b=20.0),
    Sigmoidal(a=1.0, b=30.0),
    Logarithmic(k=15.0, r_max=100.0),
    Logarithmic(k=3.0, r_max=100.0),
    Logarithmic(k=0.5, r_max=100.0),
)

AGGREGATIONS = ("mean", "median")

# Unity-gain SNR giving 0.5 rate units per RB at the default rb_bandwidth,
# i.e. a total of 100 rate units over the 200-RB grid.
UNITY_SNR = 2.0 ** (0.5 / 0.015) - 1.0


class ConfigError(ValueError):
    """Invalid or unparsable scenario configuration."""


@dataclass(frozen=True)
class ScenarioConfig:
    """Everything needed to reproduce a simulation run.

    Rates (``rb_bandwidth``, utility parameters, ``r_floor``) are in
    dimensionless rate units; powers are in watts.
    """

    seed: int = 2014
    frames: int = 2000
    monte_carlo_iters: int = 200
    ue_utilities: tuple = PAPER_UTILITIES
    # scheduler
    policy: str = APP_AWARE
    weights: Optional[tuple] = None
    rate_update: str = FRAME
    r_floor: float = 1e-3
    # topology
    area_m: float = 500.0
    enb_positions: tuple = ((250.0, 250.0),)
    min_distance_m: float = 10.0
    fixed_topology: bool = False
    # resource grid
    grid: RbGrid = field(default_factory=RbGrid)
    # radio
    noise_w: float = 3.5e-15
    rb_bandwidth: float = 0.015
    power_budget_w: float = 40.0
    shadowing_std_db: float = 8.0
    doppler_hz: float = 5.0
    frame_duration_s: float = 1e-3
    num_sinusoids: int = 128
    unity_gain: bool = False
    unity_snr: float = UNITY_SNR
    # power control
    power_control: bool = False
    alpha: Optional[float] = None
    tol: float = 1e-8
    max_iters: int = 10_000
    gain_aggregation: str = "mean"

    def __post_init__(self):
        object.__setattr__(self, "ue_utilities", tuple(self.ue_utilities))
        object.__setattr__(self, "enb_positions", tuple(tuple(float(c) for c in p) for p in self.enb_positions))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        validate(self)

    @property
    def num_ues(self) -> int:
        return len(self.ue_utilities)

    @property
    def num_enbs(self) -> int:
        return len(self.enb_positions)

    @property
    def num_rbs(self) -> int:
        return self.grid.size

    @property
    def rb_power_w(self) -> float:
        """Per-RB transmit power when the budget is split evenly over chunks."""
        return self.power_budget_w / self.grid.num_freq

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _fail(name, message):
    raise ConfigError(f"{name}: {message}")


def validate(cfg: ScenarioConfig) -> None:
    """Raise ``ConfigError`` naming the first violated invariant."""
    for name in ("frames", "monte_carlo_iters", "num_sinusoids", "max_iters"):
        value = getattr(cfg, name)
        if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
            _fail(name, f"must be an integer >= 1, got {value!r}")
    if isinstance(cfg.seed, bool) or not isinstance(cfg.seed, (int, np.integer)) or not 0 <= cfg.seed < 2**64:
        _fail("seed", f"must be an integer in [0, 2**64), got {cfg.seed!r}")
    for name in ("r_floor", "area_m", "noise_w", "rb_bandwidth", "power_budget_w", "frame_duration_s",
                 "unity_snr", "tol"):
        value = getattr(cfg, name)
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0 or not np.isfinite(value):
            _fail(name, f"must be a positive number, got {value!r}")
    for name in ("min_distance_m", "shadowing_std_db", "doppler_hz"):
        value = getattr(cfg, name)
        if not isinstance(value, (int, float)) or isinstance(value, bool) or not value >= 0:
            _fail(name, f"must be a non-negative number, got {value!r}")
    if cfg.alpha is not None and not (isinstance(cfg.alpha, (int, float)) and cfg.alpha >= 0):
        _fail("alpha", f"must be null or a non-negative number, got {cfg.alpha!r}")
    if cfg.policy not in POLICIES:
        _fail("policy", f"must be one of {POLICIES}, got {cfg.policy!r}")
    if cfg.rate_update not in RATE_UPDATES:
        _fail("rate_update", f"must be one of {RATE_UPDATES}, got {cfg.rate_update!r}")
    if cfg.gain_aggregation not in AGGREGATIONS:
        _fail("gain_aggregation", f"must be one of {AGGREGATIONS}, got {cfg.gain_aggregation!r}")
    if not cfg.ue_utilities:
        _fail("ues", "at least one UE is required")
    for u in cfg.ue_utilities:
        if not isinstance(u, (Sigmoidal, Logarithmic)):
            _fail("ues", f"unsupported utility {u!r}")
    if cfg.weights is not None:
        if len(cfg.weights) != cfg.num_ues:
            _fail("weights", f"need one weight per UE ({cfg.num_ues}), got {len(cfg.weights)}")
        if any(not w > 0 for w in cfg.weights):
            _fail("weights", "must all be positive")
    if not cfg.enb_positions:
        _fail("enb_positions", "at least one eNodeB is required")
    for p in cfg.enb_positions:
        if len(p) != 2:
            _fail("enb_positions", f"positions are (x, y) pairs, got {p!r}")
    if not isinstance(cfg.grid, RbGrid):
        _fail("grid", f"expected RbGrid, got {cfg.grid!r}")


def paper_preset() -> ScenarioConfig:
    """Single cell, six UEs, 200 RBs, 500 m square, 200 Monte Carlo iterations."""
    return ScenarioConfig()


PRESETS = {"paper-sec6": paper_preset}


def place_ues(rng: np.random.Generator, area_m: float, n: int) -> np.ndarray:
    """``n`` i.i.d. uniform points in the ``[0, area_m]^2`` square, shape ``(n, 2)``."""
    if n < 1 or not area_m > 0:
        raise ValueError(f"need n >= 1 and area_m > 0, got n={n}, area_m={area_m}")
    return rng.uniform(0.0, area_m, size=(n, 2))


# ---------------------------------------------------------------- YAML layout

# section -> {document key: config attribute}
_SECTIONS = {
    "scheduler": {"policy": "policy", "weights": "weights", "rate_update": "rate_update", "r_floor": "r_floor"},
    "topology": {"area_m": "area_m", "enb_positions": "enb_positions", "min_distance_m": "min_distance_m",
                 "fixed_topology": "fixed_topology"},
    "radio": {"noise_w": "noise_w", "rb_bandwidth": "rb_bandwidth", "power_budget_w": "power_budget_w",
              "shadowing_std_db": "shadowing_std_db", "doppler_hz": "doppler_hz",
              "frame_duration_s": "frame_duration_s", "num_sinusoids": "num_sinusoids",
              "unity_gain": "unity_gain", "unity_snr": "unity_snr"},
    "power": {"power_control": "power_control", "alpha": "alpha", "tol": "tol", "max_iters": "max_iters",
              "aggregation": "gain_aggregation"},
}
_TOP_LEVEL = ("seed", "frames", "monte_carlo_iters")
REQUIRED = ("seed", "frames", "monte_carlo_iters", "ues")


def _utility_to_dict(u: UtilityFunction) -> dict:
    if isinstance(u, Sigmoidal):
        return {"kind": "sigmoidal", "a": float(u.a), "b": float(u.b)}
    return {"kind": "logarithmic", "k": float(u.k), "r_max": float(u.r_max)}


def _utility_from_dict(d, index) -> UtilityFunction:
    where = f"ues[{index}]"
    if not isinstance(d, dict):
        _fail(where, f"expected a mapping, got {d!r}")
    kind = d.get("kind")
    expected = {"sigmoidal": ("a", "b"), "logarithmic": ("k", "r_max")}
    if kind not in expected:
        _fail(f"{where}.kind", f"must be 'sigmoidal' or 'logarithmic', got {kind!r}")
    unknown = set(d) - {"kind", *expected[kind]}
    if unknown:
        _fail(where, f"unknown keys {sorted(unknown)}")
    missing = [k for k in expected[kind] if k not in d and not (kind == "logarithmic" and k == "r_max")]
    if missing:
        _fail(where, f"missing keys {missing}")
    params = {k: d[k] for k in expected[kind] if k in d}
    for k, v in params.items():
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            _fail(f"{where}.{k}", f"must be a number, got {v!r}")
    try:
        return Sigmoidal(**params) if kind == "sigmoidal" else Logarithmic(**params)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def to_dict(cfg: ScenarioConfig) -> dict:
    doc = {name: getattr(cfg, name) for name in _TOP_LEVEL}
    for section, keys in _SECTIONS.items():
        doc[section] = {key: getattr(cfg, attr) for key, attr in keys.items()}
    doc["scheduler"]["weights"] = list(cfg.weights) if cfg.weights is not None else None
    doc["topology"]["enb_positions"] = [list(p) for p in cfg.enb_positions]
    doc["grid"] = {"num_freq": cfg.grid.num_freq, "num_slots": cfg.grid.num_slots}
    doc["ues"] = [_utility_to_dict(u) for u in cfg.ue_utilities]
    return doc


def dump_config(cfg: ScenarioConfig) -> str:
    """Serialize to the YAML document format read by ``load_config``."""
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=False)


def from_dict(doc) -> ScenarioConfig:
    if doc is None:
        doc = {}
    if not isinstance(doc, dict):
        raise ConfigError(f"config must be a mapping at the top level, got {type(doc).__name__}")
    missing = [k for k in REQUIRED if k not in doc]
    if missing:
        raise ConfigError(f"missing required fields: {', '.join(missing)}")
    allowed = set(_TOP_LEVEL) | set(_SECTIONS) | {"grid", "ues", "num_ues"}
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(map(str, unknown)))}")

    kwargs = {name: doc[name] for name in _TOP_LEVEL}
    for section, keys in _SECTIONS.items():
        body = doc.get(section) or {}
        if not isinstance(body, dict):
            _fail(section, "must be a mapping")
        unknown = set(body) - set(keys)
        if unknown:
            _fail(section, f"unknown keys {sorted(map(str, unknown))}")
        for key, value in body.items():
            kwargs[keys[key]] = value

    grid = doc.get("grid") or {}
    if not isinstance(grid, dict) or set(grid) - {"num_freq", "num_slots"}:
        _fail("grid", "expects only num_freq and num_slots")
    try:
        kwargs["grid"] = RbGrid(**{k: int(v) for k, v in grid.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"grid: {exc}") from None

    ues = doc["ues"]
    if not isinstance(ues, list):
        _fail("ues", "must be a list of utility definitions")
    kwargs["ue_utilities"] = tuple(_utility_from_dict(d, i) for i, d in enumerate(ues))
    if "num_ues" in doc and doc["num_ues"] != len(ues):
        _fail("num_ues", f"is {doc['num_ues']} but {len(ues)} UEs are listed")

    if kwargs.get("enb_positions") is not None:
        try:
            kwargs["enb_positions"] = tuple(tuple(float(c) for c in p) for p in kwargs["enb_positions"])
        except (TypeError, ValueError):
            _fail("enb_positions", "must be a list of [x, y] pairs")
    if kwargs.get("weights") is not None and not isinstance(kwargs["weights"], (list, tuple)):
        _fail("weights", "must be a list of numbers or null")
    for name in ("unity_gain", "power_control", "fixed_topology"):
        if name in kwargs and not isinstance(kwargs[name], bool):
            _fail(name, f"must be true or false, got {kwargs[name]!r}")
    try:
        return ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def load_config(text: str) -> ScenarioConfig:
    """Parse and validate a YAML scenario document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError(f"parse error{where}: {problem}") from None
    return from_dict(doc)


def config_hash(cfg: ScenarioConfig) -> str:
    return hashlib.sha256(dump_config(cfg).encode("utf-8")).hexdigest()[:16]
