"""Posterior summaries and figure-ready tables built from accepted ABC samples."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .abc import ABCResult, posterior_stats
from .model import PARAM_NAMES, ParamBounds


@dataclass
class PosteriorSummary:
    names: tuple
    mean: np.ndarray
    std: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray
    edges: np.ndarray
    counts: np.ndarray
    scatter: np.ndarray  # accepted parameter table, one row per sample
    acceptance_rate: float
    n_accepted: int
    n_evaluated: int
    best_x: np.ndarray
    best_j: float

    def to_dict(self) -> dict:
        params = {}
        for k, name in enumerate(self.names):
            params[name] = {
                "mean": float(self.mean[k]),
                "std": float(self.std[k]),
                "min": float(self.minimum[k]),
                "max": float(self.maximum[k]),
                "best": float(self.best_x[k]),
            }
        return {
            "acceptance_rate": self.acceptance_rate,
            "n_accepted": self.n_accepted,
            "n_evaluated": self.n_evaluated,
            "best_j": self.best_j,
            "parameters": params,
        }


def summarize(result: ABCResult, bounds: ParamBounds, bins: int = 20, names=PARAM_NAMES) -> PosteriorSummary:
    """Per-parameter moments, ranges and bound-aligned histograms of the accepted set."""
    stats = posterior_stats(result, bounds, bins)
    best_x, _, best_j = result.best
    return PosteriorSummary(
        names=tuple(names),
        mean=stats.mean,
        std=stats.std,
        minimum=result.x.min(axis=0),
        maximum=result.x.max(axis=0),
        edges=stats.edges,
        counts=stats.counts,
        scatter=result.x.copy(),
        acceptance_rate=result.acceptance_rate,
        n_accepted=result.n_accepted,
        n_evaluated=result.n_evaluated,
        best_x=np.asarray(best_x).copy(),
        best_j=best_j,
    )


def write_histograms_csv(summary: PosteriorSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["parameter", "bin", "left", "right", "count"])
        for k, name in enumerate(summary.names):
            for b in range(summary.counts.shape[1]):
                w.writerow([name, b, repr(float(summary.edges[k, b])),
                            repr(float(summary.edges[k, b + 1])), int(summary.counts[k, b])])


def write_scatter_csv(summary: PosteriorSummary, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(summary.names)
        for row in summary.scatter:
            w.writerow([repr(float(v)) for v in row])


def write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
