"""Batched parameter-to-observable map used by calibration and inference."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .integrate import TimeGrid, integrate_batch
from .model import D, H

DEFAULT_CHUNK = 128


def default_threads() -> int:
    return os.cpu_count() or 1


@dataclass
class ForwardModel:
    """Maps parameter samples to the (H, D) series on a fixed grid from a fixed start state.

    Samples are integrated in fixed-size chunks. The chunk layout never depends
    on ``threads``, so results are bit-identical for any worker count.
    """

    u0: np.ndarray
    grid: TimeGrid
    threads: int = 1
    chunk_size: int = DEFAULT_CHUNK

    def __post_init__(self):
        self.u0 = np.asarray(self.u0, dtype=float)
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")

    def states(self, xs):
        """Full trajectories: returns ``(states (m, n, 8), ok (m,))``."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        chunks = [xs[i:i + self.chunk_size] for i in range(0, len(xs), self.chunk_size)]
        if self.threads == 1 or len(chunks) == 1:
            parts = [integrate_batch(self.u0, c, self.grid) for c in chunks]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(lambda c: integrate_batch(self.u0, c, self.grid), chunks))
        states = np.concatenate([p.states for p in parts], axis=0)
        ok = np.concatenate([p.ok for p in parts])
        return states, ok

    def __call__(self, xs):
        """Returns ``([H (m, n), D (m, n)], ok (m,))``."""
        states, ok = self.states(xs)
        return [states[:, :, H].copy(), states[:, :, D].copy()], ok
