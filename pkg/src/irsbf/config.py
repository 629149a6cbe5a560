"""Scenario configuration: defaults, JSON loading and validation.

The config file is a JSON object. Every key is optional; absent keys take
the default scenario values::

    {
      "n_bs": 32, "g_irs": 2, "k_users": 2, "m_az": 10, "m_el": 1,
      "bits": "continuous" | 1..16,
      "p_max_dbm": 30, "noise_dbm": -85, "n_paths": 2,
      "weights": "equal" | [w_1, ..., w_K],
      "geometry": {"bs_pos": [0, 0], "irs_pos": [[40, 30], [30, 40]],
                   "user_center": [40, 0], "user_radius": 10},
      "pathloss": {"rho_a": 61.4, "rho_b": 2, "sigma_xi_db": 5.8,
                   "gain_tx_dbi": 9.82, "gain_rx_dbi": 0},
      "seed": 0, "trials": 100,
      "max_iters": 50, "conv_tol_rel": 1e-5
    }

dBm values stay in the config; solver code only ever sees the Watt
properties ``p_max_watts`` and ``noise_watts``.
"""
import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .arrays import ArrayGeometry
from .channel import PathLossParams, ScenarioGeometry
from .errors import ConfigError, InvalidArgument

CONTINUOUS = "continuous"
MAX_BITS = 16


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    n_bs: int = 32
    g_irs: int = 2
    k_users: int = 2
    m_az: int = 10
    m_el: int = 1
    bits: object = CONTINUOUS
    p_max_dbm: float = 30.0
    noise_dbm: float = -85.0
    n_paths: int = 2
    weights: object = "equal"
    geometry: ScenarioGeometry = field(default_factory=ScenarioGeometry)
    pathloss: PathLossParams = field(default_factory=PathLossParams)
    seed: int = 0
    trials: int = 100
    max_iters: int = 50
    conv_tol_rel: float = 1e-5

    def __post_init__(self):
        for name in ("n_bs", "g_irs", "m_az", "m_el", "trials", "max_iters"):
            _require(isinstance(getattr(self, name), int) and getattr(self, name) >= 1,
                     name, "must be an integer >= 1")
        _require(isinstance(self.k_users, int) and self.k_users >= 0, "k_users",
                 "must be an integer >= 0")
        _require(isinstance(self.n_paths, int) and self.n_paths >= 0, "n_paths",
                 "must be an integer >= 0")
        _require(isinstance(self.seed, int) and self.seed >= 0, "seed",
                 "must be an unsigned integer")
        _require(self.bits == CONTINUOUS
                 or (isinstance(self.bits, int) and 1 <= self.bits <= MAX_BITS),
                 "bits", f"must be '{CONTINUOUS}' or an integer in 1..{MAX_BITS}")
        for name in ("p_max_dbm", "noise_dbm"):
            _require(math.isfinite(getattr(self, name)), name, "must be finite")
        _require(self.conv_tol_rel > 0, "conv_tol_rel", "must be > 0")
        _require(len(self.geometry.irs_pos) == self.g_irs, "g_irs",
                 f"is {self.g_irs} but geometry lists {len(self.geometry.irs_pos)} IRS positions")
        if self.weights != "equal":
            w = np.asarray(self.weights, dtype=float)
            _require(w.shape == (self.k_users,), "weights",
                     f"must have one entry per user ({self.k_users})")
            _require(bool(np.all(w > 0)), "weights", "must all be positive")
        # Unit hygiene: the solver-facing quantities must be physical Watts.
        assert 0 < self.p_max_watts < math.inf and 0 < self.noise_watts < math.inf

    @property
    def arrays(self) -> ArrayGeometry:
        return ArrayGeometry(self.n_bs, self.g_irs, self.m_az, self.m_el)

    @property
    def m_tot(self) -> int:
        return self.m_az * self.m_el * self.g_irs

    @property
    def p_max_watts(self) -> float:
        return dbm_to_watts(self.p_max_dbm)

    @property
    def noise_watts(self) -> float:
        return dbm_to_watts(self.noise_dbm)

    @property
    def omega(self) -> np.ndarray:
        if self.weights == "equal":
            return np.ones(self.k_users)
        return np.asarray(self.weights, dtype=float)

    @property
    def continuous(self) -> bool:
        return self.bits == CONTINUOUS

    def replace(self, **changes) -> "SystemConfig":
        try:
            return dataclasses.replace(self, **changes)
        except (InvalidArgument, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["geometry"] = {
            "bs_pos": list(self.geometry.bs_pos),
            "irs_pos": [list(p) for p in self.geometry.irs_pos],
            "user_center": list(self.geometry.user_center),
            "user_radius": self.geometry.user_radius,
        }
        if self.weights != "equal":
            d["weights"] = [float(x) for x in self.weights]
        return d


def _require(ok, name, msg):
    if not ok:
        raise ConfigError(f"{name} {msg}")


_TOP_KEYS = {f.name for f in dataclasses.fields(SystemConfig)}
_GEOM_KEYS = {f.name for f in dataclasses.fields(ScenarioGeometry)}
_PL_KEYS = {f.name for f in dataclasses.fields(PathLossParams)}


def _as_int(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return int(value)


def _as_float(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _point(name, value):
    try:
        x, y = value
        return (_as_float(name, x), _as_float(name, y))
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a 2D point [x, y], got {value!r}") from None


def config_from_dict(raw: dict) -> SystemConfig:
    """Build a validated config from a parsed JSON object."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    kw = {}
    for name in ("n_bs", "g_irs", "k_users", "m_az", "m_el", "n_paths", "seed", "trials",
                 "max_iters"):
        if name in raw:
            kw[name] = _as_int(name, raw[name])
    for name in ("p_max_dbm", "noise_dbm", "conv_tol_rel"):
        if name in raw:
            kw[name] = _as_float(name, raw[name])
    if "bits" in raw:
        kw["bits"] = CONTINUOUS if raw["bits"] == CONTINUOUS else _as_int("bits", raw["bits"])
    if "weights" in raw:
        w = raw["weights"]
        if w == "equal":
            kw["weights"] = "equal"
        elif isinstance(w, list):
            kw["weights"] = tuple(_as_float("weights", x) for x in w)
        else:
            raise ConfigError("weights must be 'equal' or a list of numbers")

    g = raw.get("geometry", {})
    if not isinstance(g, dict) or set(g) - _GEOM_KEYS:
        raise ConfigError(f"geometry must be an object with keys {sorted(_GEOM_KEYS)}")
    gkw = {}
    if "bs_pos" in g:
        gkw["bs_pos"] = _point("geometry.bs_pos", g["bs_pos"])
    if "user_center" in g:
        gkw["user_center"] = _point("geometry.user_center", g["user_center"])
    if "user_radius" in g:
        gkw["user_radius"] = _as_float("geometry.user_radius", g["user_radius"])
    if "irs_pos" in g:
        if not isinstance(g["irs_pos"], list):
            raise ConfigError("geometry.irs_pos must be a list of points")
        gkw["irs_pos"] = tuple(_point("geometry.irs_pos", p) for p in g["irs_pos"])
    pl = raw.get("pathloss", {})
    if not isinstance(pl, dict) or set(pl) - _PL_KEYS:
        raise ConfigError(f"pathloss must be an object with keys {sorted(_PL_KEYS)}")
    try:
        kw["geometry"] = ScenarioGeometry(**gkw)
        kw["pathloss"] = PathLossParams(**{k: _as_float(f"pathloss.{k}", v)
                                           for k, v in pl.items()})
        return SystemConfig(**kw)
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SystemConfig:
    """Parse and validate a JSON config file; an empty file means all defaults.

    Read failures propagate as ``OSError``; bad content raises ConfigError.
    """
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if not text.strip():
        return SystemConfig()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return config_from_dict(raw)
