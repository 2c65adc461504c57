import json

import numpy as np
import pytest
from scipy import stats

from ceabc.abc import ABCConfig, ABCResult, abc_infer, read_samples_csv, write_samples_csv
from ceabc.errors import NoAcceptedSamples
from ceabc.misfit import QoITarget
from ceabc.model import PARAM_NAMES, ParamBounds
from ceabc.report import summarize, write_histograms_csv, write_json, write_scatter_csv
from ceabc.sampling import DistributionState

BOX = ParamBounds(np.zeros(3), np.array([1.0, 2.0, 4.0]))
NAMES = ("a", "b", "c")


def result_from(x):
    x = np.asarray(x, float)
    j = np.linspace(0.01, 0.05, len(x))
    return ABCResult(x, [np.zeros((len(x), 1))], j, np.arange(len(x)), 2 * len(x), 0, 0.1, ("H",))


def test_single_sample_has_zero_spread():
    s = summarize(result_from([[0.1, 0.2, 0.3]]), BOX, names=NAMES)
    assert np.all(s.std == 0) and np.array_equal(s.mean, [0.1, 0.2, 0.3])
    assert s.acceptance_rate == 0.5


def test_two_samples_hand_means_and_histograms():
    s = summarize(result_from([[0.1, 0.2, 0.3], [0.5, 1.0, 3.3]]), BOX, bins=4, names=NAMES)
    np.testing.assert_allclose(s.mean, [0.3, 0.6, 1.8])
    assert s.counts.sum(axis=1).tolist() == [2, 2, 2]
    np.testing.assert_array_equal(s.edges[2], [0, 1, 2, 3, 4])
    assert s.best_j == 0.01 and np.array_equal(s.best_x, [0.1, 0.2, 0.3])


def test_empty_result_raises():
    with pytest.raises(NoAcceptedSamples):
        summarize(result_from(np.zeros((0, 3))), BOX)


def test_moments_match_sampler_law():
    prior = DistributionState(np.array([0.2, 1.0, 3.0]), np.array([0.3, 0.5, 2.0]), BOX)
    target = QoITarget([("H", [1.0])], [1.0])
    fwd = lambda xs: ([np.ones((len(xs), 1))], np.ones(len(xs), bool))  # noqa: E731
    s = summarize(abc_infer(prior, fwd, target, ABCConfig(100_000, np.inf), seed=8), BOX, names=NAMES)
    for k in range(3):
        lo, hi = (BOX.lower[k] - prior.mu[k]) / prior.sigma[k], (BOX.upper[k] - prior.mu[k]) / prior.sigma[k]
        law = stats.truncnorm(lo, hi, loc=prior.mu[k], scale=prior.sigma[k])
        assert abs(s.mean[k] - law.mean()) < 5 * law.std() / np.sqrt(100_000)
        assert abs(s.std[k] - law.std()) < 0.01 * law.std()


def test_reloaded_samples_reproduce_summary_exactly(tmp_path):
    rng = np.random.default_rng(0)
    res = result_from(rng.random((50, 3)) * BOX.upper)
    p = tmp_path / "s.csv"
    write_samples_csv(res, p, NAMES)
    _, x, j = read_samples_csv(p)
    again = ABCResult(x, res.y, j, res.indices, res.n_evaluated, 0, 0.1, ("H",))
    a, b = summarize(res, BOX, names=NAMES).to_dict(), summarize(again, BOX, names=NAMES).to_dict()
    assert a == b


def test_written_tables(tmp_path):
    s = summarize(result_from([[0.1, 0.2, 0.3], [0.5, 1.0, 3.3]]), BOX, bins=2, names=NAMES)
    write_histograms_csv(s, tmp_path / "h.csv")
    write_scatter_csv(s, tmp_path / "s.csv")
    write_json(s.to_dict(), tmp_path / "s.json")
    hist = (tmp_path / "h.csv").read_text().splitlines()
    assert hist[0] == "parameter,bin,left,right,count" and len(hist) == 1 + 3 * 2
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "a,b,c"
    doc = json.loads((tmp_path / "s.json").read_text())
    assert doc["acceptance_rate"] == 0.5 and set(doc["parameters"]) == set(NAMES)


def test_default_names_follow_parameter_order():
    box = ParamBounds(np.zeros(12), np.ones(12))
    s = summarize(result_from(np.full((2, 12), 0.5)), box)
    assert list(s.to_dict()["parameters"]) == list(PARAM_NAMES)
