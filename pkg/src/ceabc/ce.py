"""Cross-entropy minimization of a misfit over a bounded parameter box."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AllSamplesFailed, EmptyElite
from .model import ParamBounds
from .sampling import DistributionState, ToleranceConfig, sample_truncated_gaussian, weighted_rms_norm

logger = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-12
CE_STREAM = 1


@dataclass(frozen=True)
class CEConfig:
    n_samples: int = 100
    elite_fraction: float = 0.10
    smoothing_a: float = 0.7
    smoothing_b: float = 0.8
    smoothing_q: float = 5.0
    max_iter: int = 150
    tol: ToleranceConfig = field(default_factory=ToleranceConfig)

    def __post_init__(self):
        if not 0 < self.smoothing_a <= 1:
            raise ValueError("smoothing_a must lie in (0, 1]")
        if not 0.8 <= self.smoothing_b <= 0.99:
            raise ValueError("smoothing_b must lie in [0.8, 0.99]")
        if not 5 <= self.smoothing_q <= 10:
            raise ValueError("smoothing_q must lie in [5, 10]")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")
        if not 1 <= self.n_elite < self.n_samples:
            raise ValueError("elite count must satisfy 1 <= n_elite < n_samples")

    @property
    def n_elite(self) -> int:
        return max(1, int(round(self.elite_fraction * self.n_samples)))

    def b_schedule(self, iteration: int) -> float:
        """Dynamic smoothing weight for the standard deviation at iteration ``iteration`` (>= 1)."""
        b = self.smoothing_b
        return b - b * (1.0 - 1.0 / iteration) ** self.smoothing_q


@dataclass
class CEIteration:
    iteration: int
    mu: np.ndarray
    sigma: np.ndarray
    gamma_hat: float
    best_j: float
    n_failed: int = 0


@dataclass
class CEResult:
    x_opt: np.ndarray
    j_opt: float
    final_dist: DistributionState
    history: list
    iterations_run: int
    converged: bool
    y_opt: list = None


def select_elite(samples, j_values, n_elite: int):
    """Indices-stable selection of the ``n_elite`` lowest-misfit samples.

    Returns ``(elite, gamma_hat, order)`` where ``gamma_hat`` is the worst misfit
    inside the elite and ``order`` holds the chosen sample indices. Non-finite
    misfits rank last; ties go to the lower index.
    """
    if n_elite < 1:
        raise EmptyElite("elite size must be at least 1")
    samples = np.asarray(samples, dtype=float)
    j = np.asarray(j_values, dtype=float)
    if n_elite > len(j):
        raise ValueError("elite size exceeds the number of samples")
    j = np.where(np.isfinite(j), j, np.inf)
    order = np.argsort(j, kind="stable")[:n_elite]
    return samples[order], float(j[order[-1]]), order


def update_distribution(elite, prev: DistributionState, iteration: int, cfg: CEConfig) -> DistributionState:
    """Elite mean/std refit followed by the damped smoothing step.

    Standard deviations use the population convention (divide by the elite count).
    """
    if iteration < 1:
        raise ValueError("iteration counter starts at 1")
    elite = np.asarray(elite, dtype=float)
    if elite.ndim != 2 or elite.shape[0] == 0:
        raise EmptyElite("elite set is empty")
    mu_hat = elite.mean(axis=0)
    sigma_hat = elite.std(axis=0)

    a = cfg.smoothing_a
    b_l = cfg.b_schedule(iteration)
    mu = a * mu_hat + (1.0 - a) * prev.mu
    sigma = b_l * sigma_hat + (1.0 - b_l) * prev.sigma

    bounds = prev.bounds
    mu = np.clip(mu, bounds.lower, bounds.upper)
    floor = SIGMA_FLOOR * np.where(bounds.width > 0, bounds.width, 1.0)
    sigma = np.maximum(sigma, floor)
    return DistributionState(mu, sigma, bounds)


def ce_optimize(
    forward: Callable,
    data,
    bounds: ParamBounds,
    cfg: CEConfig,
    seed: int,
    objective: Callable | None = None,
    init: DistributionState | None = None,
) -> CEResult:
    """Minimize the misfit of ``forward`` against ``data`` by cross-entropy.

    Parameters
    ----------
    forward : callable
        Batched model map: takes an ``(m, d)`` array and returns
        ``(blocks, ok)`` where ``blocks`` lists ``(m, n_k)`` arrays in the
        order of ``data`` and ``ok`` flags successful evaluations. See
        :class:`ceabc.forward.ForwardModel`.
    data : QoITarget
        Observations to fit.
    bounds : ParamBounds
        Search box; also the support of every sampling distribution.
    cfg : CEConfig
    seed : int
        Root seed; iteration ``l`` samples from sub-stream ``(1, l)``.
    objective : callable, optional
        Direct ``(m, d) -> (m,)`` misfit function replacing ``forward``/``data``
        (used for analytic test problems).
    init : DistributionState, optional
        Starting distribution; defaults to mid-box mean and uniform-equivalent spread.

    Returns
    -------
    CEResult
        ``x_opt`` is the best sample ever drawn; ``final_dist`` is the last
        smoothed distribution, to be used as the ABC prior.
    """
    if objective is not None:
        def evaluate(xs):
            return np.asarray(objective(xs), dtype=float), None
    else:
        evaluate = _misfit_objective(forward, data)
    dist = init if init is not None else DistributionState.flat(bounds)

    history = []
    x_best, j_best, y_best = None, np.inf, None
    converged = False
    iteration = 0
    while iteration < cfg.max_iter:
        iteration += 1
        xs = sample_truncated_gaussian(dist, cfg.n_samples, seed, stream=(CE_STREAM, iteration))
        j, ys = evaluate(xs)
        j = np.where(np.isfinite(j), j, np.inf)
        n_failed = int(np.sum(~np.isfinite(j)))
        if n_failed == len(j):
            raise AllSamplesFailed(f"every forward evaluation failed at CE iteration {iteration}")

        elite, gamma_hat, order = select_elite(xs, j, cfg.n_elite)
        finite = np.isfinite(j[order])
        if not finite.all():
            elite, order = elite[finite], order[finite]
            gamma_hat = float(j[order[-1]])
        k = int(order[0])
        if j[k] < j_best:
            j_best, x_best = float(j[k]), xs[k].copy()
            y_best = None if ys is None else [blk[k].copy() for blk in ys]

        prev = dist
        dist = update_distribution(elite, prev, iteration, cfg)
        history.append(CEIteration(iteration, dist.mu.copy(), dist.sigma.copy(), gamma_hat, j_best, n_failed))
        logger.debug("CE iter %d: gamma_hat=%.4g best=%.4g", iteration, gamma_hat, j_best)

        # the first update has no earlier fitted sigma to compare against
        if iteration >= 2 and weighted_rms_norm(dist.sigma, prev.sigma, cfg.tol) <= 1.0:
            converged = True
            break

    return CEResult(x_best, j_best, dist, history, iteration, converged, y_best)


def _misfit_objective(forward, data):
    from .misfit import misfit_batch

    def evaluate(xs):
        blocks, ok = forward(xs)
        j = misfit_batch(blocks, data)
        j[~np.asarray(ok)] = np.inf
        return j, blocks

    return evaluate


def write_history_csv(result: CEResult, path, names=None) -> None:
    d = result.final_dist.mu.size
    names = list(names) if names is not None else [str(i + 1) for i in range(d)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iter", *(f"mu_{n}" for n in names), *(f"sigma_{n}" for n in names),
                    "gamma_hat", "best_j"])
        for rec in result.history:
            w.writerow([rec.iteration, *map(repr, map(float, rec.mu)),
                        *map(repr, map(float, rec.sigma)), repr(rec.gamma_hat), repr(rec.best_j)])
