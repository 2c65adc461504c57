import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from ceabc.errors import DegenerateInterval, TruncationTooTight, ZeroDenominator
from ceabc.model import ParamBounds
from ceabc.sampling import (
    DistributionState,
    ToleranceConfig,
    _standard_window,
    make_rng,
    sample_truncated_gaussian,
    weighted_rms_norm,
)


def box(lo, hi):
    return ParamBounds(np.atleast_1d(np.asarray(lo, float)), np.atleast_1d(np.asarray(hi, float)))


def dist1(mu, sigma, lo, hi):
    return DistributionState(np.array([mu]), np.array([sigma]), box(lo, hi))


def test_state_validation():
    with pytest.raises(ValueError):
        dist1(2.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        dist1(0.5, 0.0, 0.0, 1.0)


def test_flat_distribution_matches_uniform_spread():
    b = box([0.0, 10.0], [1.0, 16.0])
    d = DistributionState.flat(b)
    np.testing.assert_allclose(d.mu, [0.5, 13.0])
    np.testing.assert_allclose(d.sigma, [1 / math.sqrt(12), 6 / math.sqrt(12)])


def test_tight_sigma_concentrates_on_mean():
    d = dist1(0.5, 1e-12, 0.0, 1.0)
    x = sample_truncated_gaussian(d, 1000, seed=1)
    assert np.max(np.abs(x - 0.5)) < 1e-9


def test_sample_mean_law_of_large_numbers():
    b = box([-1.0, 0.0, 2.0], [1.0, 10.0, 4.0])
    d = DistributionState(b.center, np.array([0.3, 2.0, 5.0]), b)
    n = 100_000
    x = sample_truncated_gaussian(d, n, seed=7)
    std = x.std(axis=0)
    assert np.all(np.abs(x.mean(axis=0) - d.mu) < 5 * std / math.sqrt(n))


@pytest.mark.parametrize("mu,sigma,lo,hi", [
    (0.3, 0.2, 0.0, 1.0),
    (0.0, 1.0, 2.0, 3.0),        # window in the upper tail
    (0.0, 1.0, -4.0, -3.5),      # window in the lower tail
    (5.0, 0.1, 0.0, 4.0),        # mean outside the window side: far tail (rejection path)
    (60.0, 30.0, 0.0, 120.0),
])
def test_empirical_cdf_matches_analytic_truncated_normal(mu, sigma, lo, hi):
    if not lo <= mu <= hi:
        mu_state = min(max(mu, lo), hi)
        d = dist1(mu_state, sigma, lo, hi)
        a, b = (lo - mu_state) / sigma, (hi - mu_state) / sigma
        loc = mu_state
    else:
        d = dist1(mu, sigma, lo, hi)
        a, b = (lo - mu) / sigma, (hi - mu) / sigma
        loc = mu
    x = sample_truncated_gaussian(d, 100_000, seed=3)[:, 0]
    ks = stats.kstest(x, stats.truncnorm(a, b, loc=loc, scale=sigma).cdf).statistic
    assert ks < 0.01


def test_far_tail_rejection_path_matches_analytic_cdf():
    # the window holds ~8e-11 of the Gaussian mass, below the inverse-CDF threshold
    z = _standard_window(6.4, 7.0, np.random.default_rng(0).random(50_000), make_rng(0, 9))
    assert np.all((z >= 6.4) & (z <= 7.0))
    assert stats.kstest(z, stats.truncnorm(6.4, 7.0).cdf).statistic < 0.01
    z = _standard_window(-6.5, -6.0, np.random.default_rng(1).random(50_000), make_rng(1, 9))
    assert stats.kstest(z, stats.truncnorm(-6.5, -6.0).cdf).statistic < 0.01


def test_too_tight_truncation_raises():
    with pytest.raises(TruncationTooTight):
        _standard_window(40.0, 40.0 + 1e-300, np.array([0.5]), make_rng(0))


def test_degenerate_interval_warns_and_returns_constant():
    b = box([0.0, 2.0], [1.0, 2.0])
    d = DistributionState(np.array([0.5, 2.0]), np.array([0.1, 1.0]), b)
    with pytest.warns(DegenerateInterval):
        x = sample_truncated_gaussian(d, 10, seed=0)
    assert np.all(x[:, 1] == 2.0)


def test_seed_determinism_and_streams():
    b = box(np.zeros(4), np.ones(4))
    d = DistributionState.flat(b)
    a = sample_truncated_gaussian(d, 50, seed=11, stream=(1, 2))
    assert np.array_equal(a, sample_truncated_gaussian(d, 50, seed=11, stream=(1, 2)))
    assert not np.array_equal(a, sample_truncated_gaussian(d, 50, seed=11, stream=(1, 3)))
    assert not np.array_equal(a, sample_truncated_gaussian(d, 50, seed=12, stream=(1, 2)))


@given(st.floats(-5, 5), st.floats(0.01, 10), st.floats(0.001, 10), st.integers(0, 2**32))
def test_samples_never_leave_bounds(mu_offset, sigma, width, seed):
    lo, hi = -width / 2, width / 2
    mu = min(max(mu_offset, lo), hi)
    x = sample_truncated_gaussian(dist1(mu, sigma, lo, hi), 200, seed)
    assert np.all((x >= lo) & (x <= hi))


def test_weighted_norm_hand_value():
    v = weighted_rms_norm([1.0], [0.9], ToleranceConfig(0.001, 0.05))
    assert v == pytest.approx(0.1 / 0.0485, rel=1e-14)
    assert weighted_rms_norm([1.0, 2.0], [1.0, 2.0], ToleranceConfig()) == 0.0


def test_weighted_norm_zero_denominator():
    with pytest.raises(ZeroDenominator):
        weighted_rms_norm([1.0, 0.0], [1.0, 0.0], ToleranceConfig(0.0, 0.05))


def test_weighted_norm_against_loop_oracle(rng):
    for _ in range(100):
        a, b = rng.normal(size=12), rng.normal(size=12)
        atol, rtol = rng.uniform(0, 0.01, 12), rng.uniform(0.01, 0.1)
        acc = 0.0
        for j in range(12):
            w = 1.0 / (atol[j] + 0.5 * abs(a[j] + b[j]) * rtol)
            acc += (w * (a[j] - b[j])) ** 2
        oracle = math.sqrt(acc / 12)
        assert abs(weighted_rms_norm(a, b, ToleranceConfig(atol, rtol)) - oracle) <= 1e-14 * max(1.0, oracle)


@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3), st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=3))
def test_weighted_norm_symmetric(a, b):
    tol = ToleranceConfig(0.001, 0.05)
    assert weighted_rms_norm(a, b, tol) == weighted_rms_norm(b, a, tol)
