"""Fixed-step classical Runge-Kutta integration on a regular output grid."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IntegrationBlowup, NegativeState, NonpositivePopulation
from .model import D, H, N, STATE_NAMES, admission_rate, check_params, vector_field

BLOWUP_FACTOR = 10.0
CLAMP_TOL = 1e-9
CONSERVATION_TOL = 1e-6


@dataclass(frozen=True)
class TimeGrid:
    t0: float = 0.0
    t_end: float = 730.0
    output_step: float = 1.0
    substeps_per_output: int = 10

    def __post_init__(self):
        if not self.t_end > self.t0:
            raise ValueError("t_end must be greater than t0")
        if not self.output_step > 0:
            raise ValueError("output_step must be positive")
        if int(self.substeps_per_output) != self.substeps_per_output or self.substeps_per_output < 1:
            raise ValueError("substeps_per_output must be an integer >= 1")
        span = (self.t_end - self.t0) / self.output_step
        if abs(span - round(span)) > 1e-9 * max(1.0, span):
            raise ValueError("t_end - t0 must be a whole number of output steps")

    @property
    def n_outputs(self) -> int:
        return int(round((self.t_end - self.t0) / self.output_step)) + 1

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.output_step * np.arange(self.n_outputs)

    @classmethod
    def days(cls, n_days: int, substeps: int = 10) -> "TimeGrid":
        """Grid with ``n_days`` daily output instants starting at t = 0."""
        return cls(0.0, float(n_days - 1), 1.0, substeps)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_times, 8)
    admissions: np.ndarray = field(default=None)  # cumulative rho*I since t0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.shape != (len(self.times), 8):
            raise ValueError("states must have shape (len(times), 8)")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.admissions is None:
            self.admissions = np.full(len(self.times), np.nan)

    def __len__(self):
        return len(self.times)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.states[:, STATE_NAMES.index(name)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *STATE_NAMES])
            for t, row in zip(self.times, self.states):
                w.writerow([repr(float(t)), *(repr(float(v)) for v in row)])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if rows[0] != ["t", *STATE_NAMES]:
            raise ValueError(f"{path}: unexpected header {rows[0]}")
        arr = np.array([[float(v) for v in r] for r in rows[1:]])
        return cls(arr[:, 0], arr[:, 1:])


@dataclass
class BatchTrajectories:
    """Outputs of :func:`integrate_batch`; ``ok[k]`` is False for failed samples."""

    times: np.ndarray
    states: np.ndarray  # (m, n_times, 8)
    admissions: np.ndarray  # (m, n_times)
    ok: np.ndarray  # (m,)
    reasons: list

    def trajectory(self, k: int) -> Trajectory:
        return Trajectory(self.times, self.states[k], self.admissions[k])


def _augmented_field(t, y, x):
    # y rows: 8 model states + cumulative admissions
    dy = np.empty_like(y)
    dy[:8] = vector_field(t, y[:8], x)
    dy[8] = admission_rate(y[:8], x)
    return dy


def _run(u0: np.ndarray, xs: np.ndarray, grid: TimeGrid):
    """Core RK4 loop over a batch. ``u0`` is (8, m) and ``xs`` is (12, m)."""
    m = u0.shape[1]
    n_out = grid.n_outputs
    h = grid.output_step / grid.substeps_per_output
    n0 = u0[N].copy()
    total0 = u0[N] + u0[D]
    scale = np.where(n0 > 0, n0, 1.0)

    y = np.zeros((9, m))
    y[:8] = u0
    out = np.empty((n_out, 9, m))
    out[0] = y
    ok = n0 > 0
    reasons = ["" if good else "nonpositive population" for good in ok]

    with np.errstate(all="ignore"):
        for k in range(1, n_out):
            t_base = grid.t0 + (k - 1) * grid.output_step
            for j in range(grid.substeps_per_output):
                t = t_base + j * h
                k1 = _augmented_field(t, y, xs)
                k2 = _augmented_field(t + 0.5 * h, y + (0.5 * h) * k1, xs)
                k3 = _augmented_field(t + 0.5 * h, y + (0.5 * h) * k2, xs)
                k4 = _augmented_field(t + h, y + h * k3, xs)
                y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

            states = y[:8]
            bad = ~np.all(np.isfinite(states), axis=0) | np.any(states > BLOWUP_FACTOR * scale, axis=0)
            bad |= states[N] <= 0
            neg = np.any(states < -CLAMP_TOL * scale, axis=0) & ~bad
            drift = np.abs(states[N] + states[D] - total0) > CONSERVATION_TOL * scale
            drift &= ~bad
            for idx in np.flatnonzero(ok & (bad | neg | drift)):
                if bad[idx]:
                    reasons[idx] = f"blowup at t={grid.t0 + k * grid.output_step:g}"
                elif neg[idx]:
                    reasons[idx] = f"negative state at t={grid.t0 + k * grid.output_step:g}"
                else:
                    reasons[idx] = f"N + D drifted at t={grid.t0 + k * grid.output_step:g}"
            ok &= ~(bad | neg | drift)
            # freeze failed samples so NaN/inf cannot keep propagating
            y[:, ~ok] = out[k - 1][:, ~ok]
            np.maximum(y[:8], 0.0, out=y[:8])
            out[k] = y

    return out, ok, reasons


def _scalar_field(t, y, p):
    s, e, i, a, h, _, _, n, _ = y
    beta0, alpha, f_e, gamma, rho, delta, kappa_a, kappa_h, eps_h, beta_inf, eta, t_beta = p
    # numpy tanh keeps this path bit-identical to the vectorized one
    beta = beta0 + 0.5 * (beta_inf - beta0) * (1.0 + float(np.tanh(0.5 * eta * (t - t_beta))))
    force = beta * s * (i + a + eps_h * h) / n
    d_dot = delta * (i + kappa_a * a + kappa_h * h)
    return (
        -force,
        force - alpha * e,
        f_e * alpha * e - (gamma + rho + delta) * i,
        (1.0 - f_e) * alpha * e - (kappa_a * delta + gamma) * a,
        rho * i - (gamma + kappa_h * delta) * h,
        gamma * (i + a + h),
        d_dot,
        -d_dot,
        rho * i,
    )


def _run_scalar(u0, x, grid: TimeGrid):
    """Pure-float RK4 for one trajectory; numpy call overhead dominates at batch size 1."""
    p = [float(v) for v in x]
    y = [float(v) for v in u0] + [0.0]
    n0 = y[N]
    total0 = y[N] + y[D]
    h = grid.output_step / grid.substeps_per_output
    half = 0.5 * h
    sixth = h / 6.0
    out = np.empty((grid.n_outputs, 9))
    out[0] = y
    for k in range(1, grid.n_outputs):
        t_base = grid.t0 + (k - 1) * grid.output_step
        for j in range(grid.substeps_per_output):
            t = t_base + j * h
            k1 = _scalar_field(t, y, p)
            k2 = _scalar_field(t + half, [a + half * b for a, b in zip(y, k1)], p)
            k3 = _scalar_field(t + half, [a + half * b for a, b in zip(y, k2)], p)
            k4 = _scalar_field(t + h, [a + h * b for a, b in zip(y, k3)], p)
            y = [a + sixth * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                 for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)]
        t_now = grid.t0 + k * grid.output_step
        if not all(math.isfinite(v) for v in y) or max(y[:8]) > BLOWUP_FACTOR * n0 or y[N] <= 0:
            raise IntegrationBlowup(f"blowup at t={t_now:g}")
        if min(y[:8]) < -CLAMP_TOL * n0:
            raise NegativeState(f"negative state at t={t_now:g}")
        if abs(y[N] + y[D] - total0) > CONSERVATION_TOL * n0:
            raise IntegrationBlowup(f"N + D drifted at t={t_now:g}")
        y[:8] = [max(v, 0.0) for v in y[:8]]
        out[k] = y
    return out


def integrate(u0, x, grid: TimeGrid) -> Trajectory:
    """Integrate a single trajectory from ``u0`` under parameters ``x``.

    Raises
    ------
    NonpositivePopulation
        If ``u0`` has ``N <= 0``.
    IntegrationBlowup
        If a state becomes non-finite or exceeds ten times the initial population.
    NegativeState
        If a compartment undershoots zero by more than the clamping tolerance.
    """
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != (8,):
        raise ValueError(f"initial state must have shape (8,), got {u0.shape}")
    if u0[N] <= 0:
        raise NonpositivePopulation("initial alive population must be positive")
    if np.any(u0 < 0):
        raise ValueError("initial state has negative components")
    x = check_params(x)
    out = _run_scalar(u0, x, grid)
    return Trajectory(grid.times, out[:, :8], out[:, 8])


def integrate_batch(u0, xs, grid: TimeGrid) -> BatchTrajectories:
    """Integrate one trajectory per row of ``xs`` (shape ``(m, 12)``).

    ``u0`` is either one shared state of shape ``(8,)`` or per-sample states of
    shape ``(m, 8)``. Failures are reported per sample via ``ok`` instead of
    raising, so a single extreme draw cannot abort a whole batch.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    m = xs.shape[0]
    u0 = np.asarray(u0, dtype=float)
    if u0.ndim == 1:
        u0 = np.broadcast_to(u0, (m, 8))
    out, ok, reasons = _run(np.ascontiguousarray(u0.T), np.ascontiguousarray(xs.T), grid)
    states = np.transpose(out[:, :8, :], (2, 0, 1))
    admissions = out[:, 8, :].T
    return BatchTrajectories(grid.times, states, admissions, ok, reasons)


def extract_qoi(traj: Trajectory) -> tuple[np.ndarray, np.ndarray]:
    """Hospitalized and cumulative-deaths series on the trajectory's grid."""
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return traj.states[:, H].copy(), traj.states[:, D].copy()


def write_series_csv(path, times, columns: dict) -> None:
    """Write ``t`` plus named columns with round-trippable float formatting."""
    path = Path(path)
    names = list(columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", *names])
        for k, t in enumerate(times):
            w.writerow([repr(float(t)), *(repr(float(columns[c][k])) for c in names)])
