import numpy as np
import pytest

from ceabc.errors import IntegrationBlowup, NonpositivePopulation
from ceabc.integrate import TimeGrid, Trajectory, extract_qoi, integrate, integrate_batch
from ceabc.model import LOWER, NOMINAL, UPPER, virgin_state

N0 = 5.5e6


@pytest.fixture(scope="module")
def baseline():
    return integrate(virgin_state(N0, 1.0), NOMINAL, TimeGrid())


def test_grid_validation():
    with pytest.raises(ValueError):
        TimeGrid(10, 5)
    with pytest.raises(ValueError):
        TimeGrid(substeps_per_output=0)
    with pytest.raises(ValueError):
        TimeGrid(0, 10.5)
    g = TimeGrid.days(31)
    assert g.n_outputs == 31 and g.times[0] == 0 and g.times[-1] == 30


def test_zero_rates_keep_state_constant():
    u0 = np.array([1e5, 50, 20, 10, 5, 100, 3, 1e5 + 185])
    traj = integrate(u0, np.zeros(12), TimeGrid(0, 50))
    assert np.all(traj.states == u0)


def test_disease_free_start_stays_constant():
    u0 = np.array([1e6, 0, 0, 0, 0, 0, 0, 1e6])
    traj = integrate(u0, NOMINAL, TimeGrid(0, 100))
    assert np.all(traj.states == u0)


def test_nonpositive_population_rejected():
    u0 = np.zeros(8)
    with pytest.raises(NonpositivePopulation):
        integrate(u0, NOMINAL, TimeGrid(0, 5))


def test_blowup_detected():
    u0 = virgin_state(1e4, 1e3)
    x = NOMINAL.copy()
    x[0] = x[9] = 1e6
    with pytest.raises(IntegrationBlowup):
        integrate(u0, x, TimeGrid(0, 30, 1, 1))
    batch = integrate_batch(u0, np.vstack([NOMINAL, x]), TimeGrid(0, 30, 1, 1))
    assert batch.ok.tolist() == [True, False]
    assert np.all(np.isfinite(batch.states))


def test_baseline_conservation(baseline):
    s = baseline.states
    alive = s[:, :6].sum(axis=1)
    assert np.max(np.abs(alive - s[:, 7])) / N0 < 1e-6
    assert np.max(np.abs(s[:, 7] + s[:, 6] - N0)) / N0 < 1e-6
    assert np.all(s >= 0)


def test_baseline_peak_against_fine_reference(baseline):
    fine = integrate(virgin_state(N0, 1.0), NOMINAL, TimeGrid(0, 730, 1, 1000))
    active = baseline.states[:, 1:4].sum(axis=1)
    active_ref = fine.states[:, 1:4].sum(axis=1)
    assert np.argmax(active) == np.argmax(active_ref)
    assert 320 <= np.argmax(active) <= 380
    np.testing.assert_allclose(active, active_ref, rtol=1e-5, atol=1e-3)


def test_refined_qoi_agree_within_tenth_of_percent(baseline):
    fine = integrate(virgin_state(N0, 1.0), NOMINAL, TimeGrid(0, 730, 1, 100))
    for a, b in zip(extract_qoi(baseline), extract_qoi(fine)):
        assert np.max(np.abs(a - b)) <= 1e-3 * np.max(np.abs(b))


def convergence_orders(days=100, substeps=(1, 2, 4)):
    # finer steps hit round-off (about 3e-8 on states of size 5e6) against the reference
    u0 = virgin_state(N0, 1.0)
    ref = integrate(u0, NOMINAL, TimeGrid(0, days, 1, 1000)).states
    errs = [np.max(np.abs(integrate(u0, NOMINAL, TimeGrid(0, days, 1, m)).states - ref)) for m in substeps]
    return np.log2(np.array(errs[:-1]) / np.array(errs[1:]))


def test_fourth_order_self_convergence():
    orders = convergence_orders()
    assert np.all((orders > 3.7) & (orders < 4.3)), orders


def test_extract_qoi_shapes_and_zero_case():
    u0 = np.array([1e6, 0, 0, 0, 0, 0, 0, 1e6])
    traj = integrate(u0, NOMINAL, TimeGrid(0, 20))
    h, d = extract_qoi(traj)
    assert len(h) == len(d) == len(traj.times) == 21
    assert not h.any() and not d.any()


def test_baseline_qoi_anchor_hospital_peak(baseline):
    h, _ = extract_qoi(baseline)
    assert h.max() > 6000


def test_batch_matches_scalar_path_bitwise(rng):
    xs = LOWER + rng.random((7, 12)) * (UPPER - LOWER)
    u0 = virgin_state(N0, 20.0)
    grid = TimeGrid(0, 60)
    batch = integrate_batch(u0, xs, grid)
    for k in range(len(xs)):
        if batch.ok[k]:
            single = integrate(u0, xs[k], grid)
            assert np.array_equal(single.states, batch.states[k])
            assert np.array_equal(single.admissions, batch.admissions[k])


def test_admissions_accumulator_matches_quadrature(baseline):
    rho = NOMINAL[4]
    trapz = np.concatenate([[0.0], np.cumsum(0.5 * rho * (baseline.states[1:, 2] + baseline.states[:-1, 2]))])
    np.testing.assert_allclose(baseline.admissions[-1], trapz[-1], rtol=1e-3)


def test_trajectory_csv_round_trip(tmp_path, baseline):
    p = tmp_path / "traj.csv"
    baseline.to_csv(p)
    assert p.read_text().splitlines()[0] == "t,S,E,I,A,H,R,D,N"
    back = Trajectory.from_csv(p)
    assert np.array_equal(back.states, baseline.states)
    assert np.array_equal(back.times, baseline.times)
