import threading

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ceabc.errors import WeightSumInvalid
from ceabc.ic import (
    ICReference,
    VirginConfig,
    blend_states,
    find_state_matching,
    infer_initial_condition,
    matching_index,
    read_state_csv,
    virgin_run,
    write_state_csv,
)
from ceabc.integrate import TimeGrid, Trajectory


def series_traj(values, comp="D"):
    states = np.zeros((len(values), 8))
    states[:, "SEIAHRDN".index(comp)] = values
    states[:, 0] = np.arange(len(values))  # tag rows so states are distinguishable
    states[:, 7] = 1.0
    return Trajectory(np.arange(len(values), dtype=float), states)


def linear_scan(values, ref):
    best = 0
    for k, v in enumerate(values):
        if abs(v - ref) < abs(values[best] - ref):
            best = k
    return best


def test_reference_validation():
    with pytest.raises(ValueError):
        ICReference("H", -1.0)
    with pytest.raises(ValueError):
        ICReference("Q", 1.0)
    with pytest.raises(ValueError):
        VirginConfig(n0=0.0)


def test_virgin_run_without_exposed_is_constant():
    traj = virgin_run(VirginConfig(e0=0.0, horizon=50))
    assert np.all(traj.states == traj.states[0])


def test_virgin_run_is_cached_and_read_only():
    cfg = VirginConfig(horizon=40)
    a = virgin_run(cfg)
    assert virgin_run(cfg) is a
    with pytest.raises(ValueError):
        a.states[0, 0] = 1.0


def test_virgin_run_cache_under_concurrency():
    cfg = VirginConfig(horizon=45, e0=3.0)
    out = []
    threads = [threading.Thread(target=lambda: out.append(virgin_run(cfg))) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert all(np.array_equal(o.states, out[0].states) for o in out)


def test_exact_value_match():
    traj = virgin_run(VirginConfig())
    k = 250
    u = find_state_matching(traj, ICReference("H", float(traj["H"][k])))
    assert np.array_equal(u, traj.states[k])


def test_nearest_value_on_monotone_series():
    traj = series_traj([0.0, 10.0, 100.0])
    assert find_state_matching(traj, ICReference("D", 90.0))[0] == 2


@pytest.mark.parametrize("ref", [0.0, 1e9])
def test_out_of_range_references_hit_extremes(ref):
    values = [3.0, 5.0, 8.0, 20.0]
    traj = series_traj(values)
    assert matching_index(traj, ICReference("D", ref)) == linear_scan(values, ref)


@given(st.lists(st.floats(0, 1e4), min_size=2, max_size=40).map(sorted), st.floats(0, 1.2e4))
def test_monotone_series_agree_with_linear_scan(values, ref):
    traj = series_traj(values)
    k = matching_index(traj, ICReference("D", ref))
    assert abs(values[k] - ref) == abs(values[linear_scan(values, ref)] - ref)


def test_non_monotone_series_uses_rising_limb():
    values = [0.0, 4.0, 9.0, 12.0, 9.5, 4.0, 1.0]
    traj = series_traj(values, "H")
    # 4.0 occurs on both limbs; the first crossing is chosen
    assert matching_index(traj, ICReference("H", 4.0)) == 1
    assert matching_index(traj, ICReference("H", 9.4)) == 2


def test_small_reference_perturbation_keeps_match():
    traj = virgin_run(VirginConfig())
    h = traj["H"]
    k = 240
    gap = min(h[k + 1] - h[k], h[k] - h[k - 1])
    for eps in (-0.49 * gap, 0.49 * gap):
        assert matching_index(traj, ICReference("H", h[k] + eps)) == k


def test_blend_examples():
    u = np.arange(8.0)
    v = np.arange(8.0) * 3 + 1
    assert np.array_equal(blend_states([u, v], [1.0, 0.0]), u)
    assert np.array_equal(blend_states([u, u], [0.3, 0.7]), u)
    np.testing.assert_allclose(blend_states([u, v], [0.75, 0.25]), [0.75 * a + 0.25 * b for a, b in zip(u, v)], rtol=1e-15)


def test_blend_rejects_bad_weights():
    u = np.ones(8)
    with pytest.raises(WeightSumInvalid):
        blend_states([u, u], [0.5, 0.6])
    with pytest.raises(WeightSumInvalid):
        blend_states([u, u], [1.2, -0.2])
    with pytest.raises(WeightSumInvalid):
        blend_states([u, u], [1.0])


def test_blend_preserves_conservation_residual():
    traj = virgin_run(VirginConfig())
    states = traj.states[[200, 300]]
    w = np.array([0.75, 0.25])
    residual = lambda s: s[..., :6].sum(axis=-1) - s[..., 7]  # noqa: E731
    assert residual(blend_states(states, w)) == pytest.approx(w @ residual(states), abs=1e-6)


def test_infer_initial_condition_defaults():
    refs = [ICReference("H", 1000.0), ICReference("D", 300.0)]
    u0, matched, times = infer_initial_condition(VirginConfig(), refs, [0.75, 0.25])
    assert times[0] < times[1]
    np.testing.assert_allclose(u0, 0.75 * matched[0] + 0.25 * matched[1], rtol=1e-15)
    u1, m1, _ = infer_initial_condition(VirginConfig(), refs, [1.0, 0.0])
    assert np.array_equal(u1, m1[0])


def test_state_csv_round_trip(tmp_path):
    u = np.array([1.0 / 3, 2.0, 3.5, 4.0, 5.0, 6.0, 7.0, 8.0e6])
    p = tmp_path / "ic.csv"
    write_state_csv(u, p)
    assert p.read_text().splitlines()[0] == "S,E,I,A,H,R,D,N"
    assert np.array_equal(read_state_csv(p), u)
