"""Truncated-Gaussian sampling and the weighted RMS norm used by CE and ABC."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import DegenerateInterval, TruncationTooTight, ZeroDenominator
from .model import ParamBounds

INVERSE_CDF_MIN_MASS = 1e-8
MIN_MASS = 1e-12


@dataclass(frozen=True)
class DistributionState:
    """Per-component truncated Gaussian: mean, standard deviation and support box."""

    mu: np.ndarray
    sigma: np.ndarray
    bounds: ParamBounds

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        sigma = np.asarray(self.sigma, dtype=float)
        if mu.shape != self.bounds.lower.shape or sigma.shape != mu.shape:
            raise ValueError("mu, sigma and bounds must share one shape")
        if np.any(sigma <= 0) or not np.all(np.isfinite(sigma)):
            raise ValueError("sigma must be finite and strictly positive")
        if not self.bounds.contains(mu):
            raise ValueError("mu must lie inside the bounds")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def flat(cls, bounds: ParamBounds) -> "DistributionState":
        """Mid-box mean with the standard deviation of a uniform law on the box."""
        sigma = bounds.width / math.sqrt(12.0)
        sigma = np.where(sigma > 0, sigma, 1.0)
        return cls(bounds.center, sigma, bounds)


@dataclass(frozen=True)
class ToleranceConfig:
    atol: np.ndarray | float = 0.001
    rtol: float = 0.05

    def __post_init__(self):
        if not self.rtol > 0:
            raise ValueError("rtol must be positive")
        if np.any(np.asarray(self.atol) < 0):
            raise ValueError("atol must be nonnegative")


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Generator for a named sub-stream of a root seed.

    ``stream`` identifies the consumer (e.g. CE iteration number) so that each
    stage draws from its own independent, reproducible sequence.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.PCG64(ss))


def _tail_rejection(a: float, b: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw from N(0,1) restricted to [a, b] with 0 < a < b, far in the tail.

    Exponential proposal of Robert (1995) when the window is wide, uniform
    proposal when it is narrow; both accept with bounded expected cost.
    """
    lam = 0.5 * (a + math.sqrt(a * a + 4.0))
    out = np.empty(size)
    filled = 0
    narrow = (b - a) < 1.0 / lam
    while filled < size:
        k = 2 * (size - filled) + 8
        if narrow:
            z = rng.uniform(a, b, k)
            keep = rng.uniform(size=k) <= np.exp(0.5 * (a * a - z * z))
        else:
            z = a + rng.exponential(1.0 / lam, k)
            keep = (z <= b) & (rng.uniform(size=k) <= np.exp(-0.5 * (z - lam) ** 2))
        z = z[keep][: size - filled]
        out[filled:filled + z.size] = z
        filled += z.size
    return out


def _standard_window(alpha: float, beta: float, u: np.ndarray, rng) -> np.ndarray:
    """Standardized truncated-normal draws on [alpha, beta] from uniforms ``u``."""
    # reflect so the window never lies entirely in the upper tail
    flip = alpha > 0
    if flip:
        alpha, beta = -beta, -alpha
    lo_cdf = float(ndtr(alpha))
    mass = float(ndtr(beta)) - lo_cdf
    if mass < MIN_MASS:
        raise TruncationTooTight(f"only {mass:.3e} of the Gaussian mass lies in the window")
    if mass >= INVERSE_CDF_MIN_MASS:
        z = ndtri(lo_cdf + u * mass)
    else:
        # window sits far in the lower tail here; sample its mirror image
        z = -_tail_rejection(-beta, -alpha, u.size, rng)
    z = np.clip(z, alpha, beta)
    return -z if flip else z


def sample_truncated_gaussian(dist: DistributionState, n: int, seed: int, stream=()) -> np.ndarray:
    """Draw ``n`` independent parameter vectors, shape ``(n, d)``.

    Components are independent truncated Gaussians (diagonal covariance).
    Uniforms are drawn up front in sample-major order, so the result depends
    only on ``(dist, n, seed, stream)``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = make_rng(seed, *stream)
    d = dist.mu.size
    u = rng.random((n, d))
    out = np.empty((n, d))
    lo, hi = dist.bounds.lower, dist.bounds.upper
    for j in range(d):
        if lo[j] == hi[j]:
            warnings.warn(f"component {j} has a degenerate interval; returning the constant",
                          DegenerateInterval, stacklevel=2)
            out[:, j] = lo[j]
            continue
        alpha = (lo[j] - dist.mu[j]) / dist.sigma[j]
        beta = (hi[j] - dist.mu[j]) / dist.sigma[j]
        z = _standard_window(alpha, beta, u[:, j], make_rng(seed, *stream, 1_000_003, j))
        out[:, j] = np.clip(dist.mu[j] + dist.sigma[j] * z, lo[j], hi[j])
    return out


def weighted_rms_norm(a, b, tol: ToleranceConfig) -> float:
    """Root-mean-square of ``w_j (a_j - b_j)`` with ``w_j = 1/(atol_j + rtol |a_j + b_j| / 2)``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("a and b must be 1-D arrays of equal length")
    denom = np.asarray(tol.atol, dtype=float) + 0.5 * np.abs(a + b) * tol.rtol
    if np.any(denom == 0):
        raise ZeroDenominator("atol_j = 0 and a_j + b_j = 0 for some component")
    w = 1.0 / denom
    return float(np.sqrt(np.mean((w * (a - b)) ** 2)))
