"""Dynamically consistent initial conditions taken from a virgin-population run.

A state is picked from the simulated outbreak for each reference observation
(the instant whose compartment value is closest to the reference), and the
picked states are blended with convex weights.
"""

from __future__ import annotations

import csv
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import WeightSumInvalid
from .integrate import TimeGrid, Trajectory, integrate
from .model import NOMINAL, STATE_NAMES, virgin_state


@dataclass(frozen=True)
class ICReference:
    component: str
    ref_value: float

    def __post_init__(self):
        if self.component not in STATE_NAMES:
            raise ValueError(f"unknown compartment {self.component!r}")
        if not self.ref_value >= 0:
            raise ValueError("reference value must be nonnegative")


@dataclass(frozen=True)
class VirginConfig:
    n0: float = 5.5e6
    e0: float = 1.0
    horizon: float = 730.0
    params: np.ndarray = field(default_factory=lambda: NOMINAL.copy())

    def __post_init__(self):
        if not self.n0 > 0:
            raise ValueError("N0 must be positive")
        if not 0 <= self.e0 <= self.n0:
            raise ValueError("E0 must lie in [0, N0]")

    def key(self, grid: TimeGrid):
        return (self.n0, self.e0, tuple(float(v) for v in self.params), grid)


_cache: dict = {}
_cache_lock = threading.Lock()


def virgin_run(cfg: VirginConfig, grid: TimeGrid | None = None) -> Trajectory:
    """Outbreak in a fully susceptible population seeded with ``cfg.e0`` exposed.

    Results are memoized per configuration; callers must not mutate the
    returned trajectory.
    """
    if grid is None:
        grid = TimeGrid(0.0, cfg.horizon)
    key = cfg.key(grid)
    with _cache_lock:
        hit = _cache.get(key)
    if hit is not None:
        return hit
    traj = integrate(virgin_state(cfg.n0, cfg.e0), cfg.params, grid)
    traj.states.setflags(write=False)
    with _cache_lock:
        _cache.setdefault(key, traj)
        return _cache[key]


def find_state_matching(traj: Trajectory, ref: ICReference) -> np.ndarray:
    """State at the output instant whose component value is closest to the reference.

    If the series attains the reference more than once (rising and falling
    limb of an epidemic curve), the earliest crossing wins. See
    :func:`matching_index`.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return traj.states[matching_index(traj, ref)].copy()


def matching_index(traj: Trajectory, ref: ICReference) -> int:
    """Index of the matched instant.

    Among consecutive instants bracketing the reference value, the first
    bracket is used and its closer endpoint returned (earlier one on ties).
    When the reference is never attained, the global closest instant is used,
    earliest on ties.
    """
    gap = traj[ref.component] - ref.ref_value
    hits = np.flatnonzero((gap[:-1] == 0) | (gap[:-1] * gap[1:] < 0))
    if gap[-1] == 0:
        hits = np.append(hits, len(gap) - 1)
    if hits.size == 0:
        return int(np.argmin(np.abs(gap)))
    k = int(hits[0])
    if k + 1 < len(gap) and abs(gap[k + 1]) < abs(gap[k]):
        return k + 1
    return k


def blend_states(states, weights) -> np.ndarray:
    """Convex combination of full states.

    Computed as offsets from the first state, so equal inputs (and a unit
    weight on the first state) reproduce that state exactly.
    """
    states = np.asarray(states, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if states.ndim != 2 or states.shape[1] != 8:
        raise ValueError("states must have shape (k, 8)")
    if weights.shape != (states.shape[0],):
        raise WeightSumInvalid("one weight per state is required")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
        raise WeightSumInvalid(f"weights must be nonnegative and sum to 1, got {weights.tolist()}")
    base = states[0]
    return base + weights[1:] @ (states[1:] - base)


def infer_initial_condition(cfg: VirginConfig, refs, weights, grid: TimeGrid | None = None):
    """Match each reference on the virgin run, then blend.

    Returns ``(u0, matched_states, matched_times)``.
    """
    traj = virgin_run(cfg, grid)
    idx = [matching_index(traj, r) for r in refs]
    matched = traj.states[idx].copy()
    return blend_states(matched, weights), matched, traj.times[idx].copy()


def write_state_csv(u, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(STATE_NAMES)
        w.writerow([repr(float(v)) for v in u])


def read_state_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != STATE_NAMES or len(rows) != 2:
        raise ValueError(f"{path}: expected header {','.join(STATE_NAMES)} and one row")
    return np.array([float(v) for v in rows[1]])
