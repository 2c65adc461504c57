"""Run configuration: a flat map of dotted keys loaded from TOML, overridable from the CLI.

Example file::

    omega = 0.75
    ce.n_samples = 100
    abc.tol = 0.1
    ic.h_ref = 1000
    window.start = "2020-05-01"
    params.beta0 = 0.15
    bounds.upper.eta = 8
"""

from __future__ import annotations

import datetime as dt
import sys
from dataclasses import dataclass, field

import numpy as np

from .abc import ABCConfig
from .ce import CEConfig
from .errors import ConfigError
from .ic import VirginConfig
from .model import LOWER, NOMINAL, PARAM_NAMES, UPPER, ParamBounds
from .sampling import ToleranceConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULTS = {
    "seed": None,
    "omega": 0.75,
    "ce.n_samples": 100,
    "ce.elite_fraction": 0.10,
    "ce.smoothing_a": 0.7,
    "ce.smoothing_b": 0.8,
    "ce.smoothing_q": 5.0,
    "ce.max_iter": 150,
    "ce.atol": 0.001,
    "ce.rtol": 0.05,
    "ce.init": "midpoint",
    "abc.n_samples": 2000,
    "abc.tol": 0.1,
    "abc.level": 0.95,
    "abc.bins": 20,
    "abc.prior": "ce",
    "ic.h_ref": None,
    "ic.d_ref": None,
    "ic.weight": None,
    "virgin.n0": 5.5e6,
    "virgin.e0": 1.0,
    "virgin.horizon": 730.0,
    "grid.substeps": 10,
    "grid.chunk_size": 128,
    "window.start": None,
    "window.end": None,
    "data.reconcile_tol": 1.0,
    "predict.horizon": 30,
    "synthetic.start": "2020-05-01",
    "synthetic.days": 31,
    "synthetic.noise": 0.0,
    "paths.data": None,
    "paths.out": "results",
    "output.gnuplot": False,
}
DEFAULTS.update({f"params.{n}": float(v) for n, v in zip(PARAM_NAMES, NOMINAL)})
DEFAULTS.update({f"bounds.lower.{n}": float(v) for n, v in zip(PARAM_NAMES, LOWER)})
DEFAULTS.update({f"bounds.upper.{n}": float(v) for n, v in zip(PARAM_NAMES, UPPER)})

NULLABLE_FLOATS = ("ic.h_ref", "ic.d_ref", "ic.weight")

# where and how a run executes; kept out of result files so they do not affect output bytes
RUNTIME_KEYS = ("threads", "paths.out")


def flatten(tree: dict, prefix: str = "") -> dict:
    flat = {}
    for key, val in tree.items():
        name = f"{prefix}{key}"
        if isinstance(val, dict):
            flat.update(flatten(val, name + "."))
        else:
            flat[name] = val
    return flat


def _coerce(key: str, value):
    default = DEFAULTS[key]
    if value is None:
        return None
    if isinstance(value, dt.date):
        return value.isoformat()
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and key != "seed":
        if isinstance(value, bool) or float(value) != int(float(value)):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(float(value))
    if isinstance(default, float) or key in NULLABLE_FLOATS:
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if key == "seed":
        try:
            seed = int(value)
        except (TypeError, ValueError):
            raise ConfigError(f"seed: expected an integer, got {value!r}") from None
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        return seed
    return str(value)


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: dict(DEFAULTS))

    @classmethod
    def load(cls, path=None, overrides: dict | None = None) -> "RunConfig":
        values = dict(DEFAULTS)
        if path is not None:
            try:
                with open(path, "rb") as fh:
                    raw = tomllib.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"{path}: {exc}") from exc
            values.update(cls._checked(flatten(raw)))
        if overrides:
            values.update(cls._checked({k: v for k, v in overrides.items() if v is not None}))
        cfg = cls(values)
        cfg.validate()
        return cfg

    @staticmethod
    def _checked(flat: dict) -> dict:
        unknown = sorted(set(flat) - set(DEFAULTS))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        return {k: _coerce(k, v) for k, v in flat.items()}

    def __getitem__(self, key):
        return self.values[key]

    def validate(self) -> None:
        """Build every typed sub-config once so bad values fail early with exit code 2."""
        try:
            self.bounds()
            self.ce()
            self.abc()
            self.virgin()
            for key in ("ic.h_ref", "ic.d_ref"):
                if self[key] is not None and not self[key] >= 0:
                    raise ValueError(f"{key} must be nonnegative")
            if not 0.0 <= self["omega"] <= 1.0:
                raise ValueError("omega must lie in [0, 1]")
            w = self.ic_weight
            if not 0.0 <= w <= 1.0:
                raise ValueError("ic.weight must lie in [0, 1]")
            if not 0 < self["abc.level"] < 1:
                raise ValueError("abc.level must lie in (0, 1)")
            if self["abc.bins"] < 1 or self["grid.substeps"] < 1 or self["grid.chunk_size"] < 1:
                raise ValueError("abc.bins, grid.substeps and grid.chunk_size must be >= 1")
            if self["predict.horizon"] < 0 or self["synthetic.days"] < 2:
                raise ValueError("predict.horizon must be >= 0 and synthetic.days >= 2")
            if self["abc.prior"] not in ("ce", "flat"):
                raise ValueError("abc.prior must be 'ce' or 'flat'")
            if self["ce.init"] not in ("midpoint", "nominal"):
                raise ValueError("ce.init must be 'midpoint' or 'nominal'")
            for key in ("window.start", "window.end", "synthetic.start"):
                self.date(key)
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def date(self, key: str):
        val = self[key]
        return None if val is None else dt.date.fromisoformat(val)

    def params(self) -> np.ndarray:
        return np.array([self[f"params.{n}"] for n in PARAM_NAMES])

    def bounds(self) -> ParamBounds:
        return ParamBounds(
            np.array([self[f"bounds.lower.{n}"] for n in PARAM_NAMES]),
            np.array([self[f"bounds.upper.{n}"] for n in PARAM_NAMES]),
        )

    def ce(self) -> CEConfig:
        return CEConfig(
            n_samples=self["ce.n_samples"],
            elite_fraction=self["ce.elite_fraction"],
            smoothing_a=self["ce.smoothing_a"],
            smoothing_b=self["ce.smoothing_b"],
            smoothing_q=self["ce.smoothing_q"],
            max_iter=self["ce.max_iter"],
            tol=ToleranceConfig(self["ce.atol"], self["ce.rtol"]),
        )

    def abc(self) -> ABCConfig:
        return ABCConfig(self["abc.n_samples"], self["abc.tol"])

    def virgin(self) -> VirginConfig:
        return VirginConfig(self["virgin.n0"], self["virgin.e0"], self["virgin.horizon"], self.params())

    @property
    def ic_weight(self) -> float:
        w = self["ic.weight"]
        return self["omega"] if w is None else w

    def as_dict(self) -> dict:
        return {k: self.values[k] for k in sorted(self.values) if k not in RUNTIME_KEYS}
