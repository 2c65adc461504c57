"""SEIR(+AHD) right-hand side and the tanh transmission-rate schedule.

States and parameters are plain numpy arrays. A single state has shape ``(8,)``
ordered as :data:`STATE_NAMES`; a single parameter vector has shape ``(12,)``
ordered as :data:`PARAM_NAMES`. Every function here also accepts a trailing
batch axis, i.e. states of shape ``(8, m)`` with parameters of shape ``(12, m)``,
which is how the calibration loop evaluates many candidates at once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonpositivePopulation

STATE_NAMES = ("S", "E", "I", "A", "H", "R", "D", "N")
PARAM_NAMES = (
    "beta0",
    "alpha",
    "fE",
    "gamma",
    "rho",
    "delta",
    "kappaA",
    "kappaH",
    "epsH",
    "betaInf",
    "eta",
    "tBeta",
)
PARAM_UNITS = (
    "1/day", "1/day", "-", "1/day", "1/day", "1/day",
    "-", "-", "-", "1/day", "1/day", "day",
)

S, E, I, A, H, R, D, N = range(8)

NOMINAL = np.array(
    [1 / 7, 1 / 5, 0.8, 1 / 14, 1 / 700, 1 / 14000,
     0.0010, 0.05, 0.2, 1 / 7, 5.0, 60.0]
)
LOWER = np.array(
    [1 / 14, 1 / 10, 0.7, 1 / 21, 1 / 2100, 1 / 21000,
     0.0005, 0.01, 0.1, 1 / 14, 0.0, 0.0]
)
UPPER = np.array(
    [1 / 2, 1 / 2, 0.9, 1 / 7, 1 / 100, 1 / 100,
     0.0050, 0.10, 0.5, 1 / 2, 10.0, 120.0]
)


@dataclass(frozen=True)
class ParamBounds:
    """Componentwise box ``lower <= x <= upper`` for the parameter vector."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("bounds must be 1-D arrays of equal length")
        if np.any(lo > hi):
            bad = [int(j) for j in np.flatnonzero(lo > hi)]
            raise ValueError(f"lower bound exceeds upper bound at components {bad}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.upper + self.lower)

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all((x >= self.lower) & (x <= self.upper)))

    @classmethod
    def default(cls) -> "ParamBounds":
        return cls(LOWER.copy(), UPPER.copy())


def check_params(x) -> np.ndarray:
    """Validate a single parameter vector and return it as a float array."""
    x = np.asarray(x, dtype=float)
    if x.shape != (len(PARAM_NAMES),):
        raise ValueError(f"parameter vector must have shape (12,), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("parameter vector contains non-finite values")
    if np.any(x < 0):
        raise ValueError("parameters must be nonnegative")
    if not 0.0 <= x[2] <= 1.0:
        raise ValueError("fE must lie in [0, 1]")
    return x


def params_from_dict(values: dict, base=None) -> np.ndarray:
    x = np.array(NOMINAL if base is None else base, dtype=float)
    for key, val in values.items():
        if key not in PARAM_NAMES:
            raise KeyError(f"unknown parameter {key!r}")
        x[PARAM_NAMES.index(key)] = float(val)
    return x


def transmission_rate(t, x):
    """Contact rate switching smoothly from ``beta0`` to ``betaInf`` around ``tBeta``."""
    beta0, beta_inf, eta, t_beta = x[0], x[9], x[10], x[11]
    return beta0 + 0.5 * (beta_inf - beta0) * (1.0 + np.tanh(0.5 * eta * (t - t_beta)))


def rhs(t, u, x):
    """Time derivative of the state ``u`` under parameters ``x``.

    Raises
    ------
    NonpositivePopulation
        If the alive population ``N`` is not strictly positive.
    """
    if np.any(np.asarray(u[N]) <= 0):
        raise NonpositivePopulation("alive population N must be positive")
    return vector_field(t, u, x)


def vector_field(t, u, x):
    """Unchecked version of :func:`rhs` used inside the integrator hot loop."""
    s, e, i, a, h, n = u[S], u[E], u[I], u[A], u[H], u[N]
    alpha, f_e, gamma, rho, delta = x[1], x[2], x[3], x[4], x[5]
    kappa_a, kappa_h, eps_h = x[6], x[7], x[8]

    force = transmission_rate(t, x) * s * (i + a + eps_h * h) / n
    d_dot = delta * (i + kappa_a * a + kappa_h * h)
    return np.stack(
        [
            -force,
            force - alpha * e,
            f_e * alpha * e - (gamma + rho + delta) * i,
            (1.0 - f_e) * alpha * e - (kappa_a * delta + gamma) * a,
            rho * i - (gamma + kappa_h * delta) * h,
            gamma * (i + a + h),
            d_dot,
            -d_dot,
        ]
    )


def admission_rate(u, x):
    """Flux of new hospital admissions, ``rho * I``."""
    return x[4] * u[I]


def virgin_state(n0: float = 5.5e6, e0: float = 1.0) -> np.ndarray:
    """Fully susceptible population seeded with ``e0`` exposed individuals."""
    u = np.zeros(8)
    u[S] = n0 - e0
    u[E] = e0
    u[N] = n0
    return u
