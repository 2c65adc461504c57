"""Weighted relative squared-error discrepancy between model and data series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch, ZeroDataNorm

WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class QoITarget:
    """Observed series split into labelled blocks, each carrying a convex weight."""

    labels: tuple
    series: tuple
    weights: tuple

    def __init__(self, blocks, weights):
        blocks = list(blocks)
        weights = [float(w) for w in weights]
        if len(blocks) != len(weights):
            raise ShapeMismatch("one weight per block is required")
        if not blocks:
            raise ShapeMismatch("target needs at least one block")
        if any(w < 0 for w in weights):
            raise ValueError("weights must be nonnegative")
        if abs(sum(weights) - 1.0) > WEIGHT_SUM_TOL * len(weights):
            raise ValueError(f"weights must sum to 1, got {sum(weights)!r}")
        labels, series = [], []
        for label, values in blocks:
            arr = np.asarray(values, dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                raise ShapeMismatch(f"block {label!r} must be a nonempty 1-D series")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"block {label!r} has non-finite values")
            labels.append(str(label))
            series.append(arr)
        for label, arr, w in zip(labels, series, weights):
            if w > 0 and not np.any(arr):
                raise ZeroDataNorm(f"block {label!r} is weighted but has zero norm")
        object.__setattr__(self, "labels", tuple(labels))
        object.__setattr__(self, "series", tuple(series))
        object.__setattr__(self, "weights", tuple(weights))

    def __len__(self):
        return len(self.labels)

    def block(self, label: str) -> np.ndarray:
        return self.series[self.labels.index(label)]

    @property
    def lengths(self) -> tuple:
        return tuple(len(s) for s in self.series)


def misfit(y_model, target: QoITarget) -> float:
    """Sum over blocks of ``w_k * ||data_k - model_k||^2 / ||data_k||^2``.

    ``y_model`` is a sequence of series in the same block order as ``target``.
    Blocks with zero weight are skipped entirely, so they may hold anything of
    the right length.
    """
    blocks = [np.asarray(b, dtype=float) for b in y_model]
    return float(misfit_batch([b[None, :] for b in blocks], target)[0])


def misfit_batch(y_model, target: QoITarget) -> np.ndarray:
    """Vectorized :func:`misfit` over a leading sample axis.

    Each entry of ``y_model`` has shape ``(m, n_k)``. Non-finite model values
    produce ``inf`` for that sample.
    """
    if len(y_model) != len(target):
        raise ShapeMismatch(f"expected {len(target)} model blocks, got {len(y_model)}")
    total = None
    for label, data, w, model in zip(target.labels, target.series, target.weights, y_model):
        model = np.asarray(model, dtype=float)
        if model.ndim != 2 or model.shape[1] != data.shape[0]:
            raise ShapeMismatch(
                f"block {label!r}: model length {model.shape[-1]} != data length {data.shape[0]}"
            )
        if total is None:
            total = np.zeros(model.shape[0])
        if w == 0.0:
            continue
        norm2 = float(np.dot(data, data))
        if norm2 == 0.0:
            raise ZeroDataNorm(f"block {label!r} is weighted but has zero norm")
        diff = data[None, :] - model
        with np.errstate(invalid="ignore", over="ignore"):
            total = total + w * np.einsum("ij,ij->i", diff, diff) / norm2
    total[~np.isfinite(total)] = np.inf
    return total
