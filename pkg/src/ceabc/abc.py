"""Rejection ABC seeded by a truncated-Gaussian prior, plus posterior summaries."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import NoAcceptedSamples
from .misfit import QoITarget, misfit_batch
from .model import ParamBounds
from .sampling import DistributionState, sample_truncated_gaussian

ABC_STREAM = 2


@dataclass(frozen=True)
class ABCConfig:
    n_samples: int = 2000
    tol: float = 0.1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")


@dataclass
class ABCResult:
    """Accepted draws in draw order. An empty acceptance set is a valid outcome."""

    x: np.ndarray  # (k, d)
    y: list  # per block, (k, n_b)
    j: np.ndarray  # (k,)
    indices: np.ndarray  # draw index of each accepted sample
    n_evaluated: int
    n_failed: int
    tol: float
    labels: tuple = ("H", "D")

    @property
    def n_accepted(self) -> int:
        return len(self.j)

    @property
    def acceptance_rate(self) -> float:
        return self.n_accepted / self.n_evaluated

    @property
    def best_index(self) -> int:
        self.require_accepted()
        return int(np.argmin(self.j))

    @property
    def best(self):
        """``(x, y_blocks, j)`` of the accepted sample with the lowest misfit."""
        k = self.best_index
        return self.x[k], [blk[k] for blk in self.y], float(self.j[k])

    def require_accepted(self):
        if self.n_accepted == 0:
            raise NoAcceptedSamples(
                f"no sample out of {self.n_evaluated} met tol={self.tol}; consider raising tol"
            )


def abc_infer(prior: DistributionState, forward, data: QoITarget, cfg: ABCConfig, seed: int) -> ABCResult:
    """Draw from ``prior``, simulate, and keep draws with misfit strictly below ``cfg.tol``.

    Failed forward evaluations count as rejections.
    """
    xs = sample_truncated_gaussian(prior, cfg.n_samples, seed, stream=(ABC_STREAM,))
    blocks, ok = forward(xs)
    j = misfit_batch(blocks, data)
    ok = np.asarray(ok, dtype=bool)
    j[~ok] = np.inf
    keep = np.flatnonzero(j < cfg.tol)
    return ABCResult(
        x=xs[keep],
        y=[np.asarray(b)[keep] for b in blocks],
        j=j[keep],
        indices=keep,
        n_evaluated=cfg.n_samples,
        n_failed=int(np.sum(~ok)),
        tol=cfg.tol,
        labels=data.labels,
    )


@dataclass
class PosteriorStats:
    mean: np.ndarray
    std: np.ndarray
    edges: np.ndarray  # (d, bins + 1)
    counts: np.ndarray  # (d, bins)
    pairs: list  # (i, j) index pairs for scatter plots


def posterior_stats(result: ABCResult, bounds: ParamBounds, bins: int = 20) -> PosteriorStats:
    """Moments and bound-aligned histograms of the accepted parameter vectors."""
    result.require_accepted()
    x = result.x
    d = x.shape[1]
    edges = np.empty((d, bins + 1))
    counts = np.empty((d, bins), dtype=int)
    for k in range(d):
        lo, hi = bounds.lower[k], bounds.upper[k]
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        counts[k], edges[k] = np.histogram(x[:, k], bins=bins, range=(lo, hi))
    return PosteriorStats(
        mean=x.mean(axis=0),
        std=x.std(axis=0),
        edges=edges,
        counts=counts,
        pairs=list(combinations(range(d), 2)),
    )


@dataclass
class Envelope:
    times: np.ndarray
    lower: np.ndarray
    median: np.ndarray
    upper: np.ndarray

    def contains(self, series, rtol: float = 0.0) -> np.ndarray:
        series = np.asarray(series, dtype=float)
        slack = rtol * np.abs(series)
        return (series >= self.lower - slack) & (series <= self.upper + slack)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "lower", "median", "upper"])
            for row in zip(self.times, self.lower, self.median, self.upper):
                w.writerow([repr(float(v)) for v in row])


def envelope_from_series(series, times, level: float = 0.95) -> Envelope:
    """Pointwise median and central ``level`` band, linear interpolation between order statistics."""
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    series = np.atleast_2d(np.asarray(series, dtype=float))
    if series.shape[0] == 0:
        raise NoAcceptedSamples("no series to summarize")
    q = np.quantile(series, [(1 - level) / 2, 0.5, (1 + level) / 2], axis=0, method="linear")
    return Envelope(np.asarray(times, dtype=float), q[0], q[1], q[2])


def credible_envelope(result: ABCResult, level: float = 0.95, times=None) -> dict:
    """Envelope per QoI block over the accepted series, keyed by block label."""
    result.require_accepted()
    out = {}
    for label, blk in zip(result.labels, result.y):
        t = np.arange(blk.shape[1], dtype=float) if times is None else times
        out[label] = envelope_from_series(blk, t, level)
    return out


def write_samples_csv(result: ABCResult, path, names) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([*names, "j"])
        for x, j in zip(result.x, result.j):
            w.writerow([*(repr(float(v)) for v in x), repr(float(j))])


def read_samples_csv(path):
    """Returns ``(names, x (k, d), j (k,))`` from a file written by :func:`write_samples_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header = rows[0]
    if not header or header[-1] != "j":
        raise ValueError(f"{path}: last column must be 'j'")
    body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    return header[:-1], body[:, :-1], body[:, -1]
