import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixupecp.systems import (EEGParams, LogisticParams, LorenzParams, TransitionProtocol,
                              gen_eeg, gen_logistic, gen_lorenz, iterate_logistic, lorenz_field,
                              lorenz_fixed_points, lyapunov_logistic, lyapunov_trajectory,
                              noise_sweep, seeded_lorenz, sweep_logistic)

# -- Lorenz -------------------------------------------------------------------


@pytest.mark.parametrize("rho", [20.0, 28.0])
def test_fixed_points_zero_the_field(rho):
    for p in lorenz_fixed_points(rho):
        assert np.allclose(lorenz_field(p, 10.0, rho, 8 / 3), 0, atol=1e-12)


def test_lorenz_params_validation():
    with pytest.raises(ValueError):
        LorenzParams(switch_time=0.0)
    with pytest.raises(ValueError):
        LorenzParams(sample_every=0)
    with pytest.raises(ValueError):
        LorenzParams(dt=0.0)


def test_integration_shape_and_sampling():
    p = LorenzParams(duration=10.0, switch_time=5.0, sample_every=4)
    traj = gen_lorenz(p)
    assert traj.states.shape == (251, 3)
    assert traj.sample_interval == pytest.approx(0.04)
    assert traj.times[-1] == pytest.approx(10.0)
    assert traj.index_of(5.0) == 125
    dense = gen_lorenz(LorenzParams(duration=10.0, switch_time=5.0))
    assert np.array_equal(dense.states[::4], traj.states)


def test_rk4_step_has_fourth_order_error():
    # halving dt should cut the one-unit error by about 16
    start = (1.0, 2.0, 20.0)
    def run(dt):
        p = LorenzParams(rho_pre=28.0, rho_post=28.0, dt=dt, duration=0.5, switch_time=0.25,
                         burn_in=0.0, initial_state=start)
        return gen_lorenz(p).states[-1]
    ref = run(1e-4)
    e1, e2 = np.linalg.norm(run(0.01) - ref), np.linalg.norm(run(0.005) - ref)
    assert 10 < e1 / e2 < 22


def test_trajectory_stays_on_the_attractor():
    traj = gen_lorenz(LorenzParams())
    assert np.all(np.isfinite(traj.states))
    assert np.abs(traj.states[:, :2]).max() < 30
    assert 0 < traj.states[:, 2].min() and traj.states[:, 2].max() < 60


def test_rho_20_settles_on_a_fixed_point():
    p = LorenzParams(rho_pre=20.0, rho_post=20.0, duration=200.0, switch_time=100.0, burn_in=100.0)
    tail = gen_lorenz(p).states[-1000:]
    dist = np.min(np.linalg.norm(lorenz_fixed_points(20.0)[:, None, :] - tail[None], axis=2), axis=0)
    assert dist.max() < 1e-3


def test_seeded_initial_states_are_reproducible():
    a, b = seeded_lorenz(3), seeded_lorenz(3)
    assert a.initial_state == b.initial_state != seeded_lorenz(4).initial_state


def test_lyapunov_of_the_chaotic_flow():
    p = LorenzParams(rho_pre=28.0, rho_post=28.0, duration=200.0, switch_time=100.0)
    est = lyapunov_trajectory(gen_lorenz(p))
    assert est.lambda1 == pytest.approx(0.9, abs=0.1)


def test_lyapunov_of_the_stable_flow_is_negative():
    p = LorenzParams(rho_pre=20.0, rho_post=20.0, duration=100.0, switch_time=50.0, burn_in=100.0)
    assert lyapunov_trajectory(gen_lorenz(p)).lambda1 < 0


def test_lyapunov_of_a_linear_map():
    # x <- 2x doubles separations each step, so lambda1 = ln 2 per unit time
    states = 2.0 ** np.arange(40)[:, None] * np.ones((1, 2)) * 1e-3
    est = lyapunov_trajectory(states, dt=1.0, rhs=lambda s, t: tuple(2.0 * np.asarray(s)))
    assert est.lambda1 == pytest.approx(math.log(2))


def test_lyapunov_needs_a_step_for_arrays():
    with pytest.raises(ValueError):
        lyapunov_trajectory(np.zeros((50, 3)))


# -- logistic -----------------------------------------------------------------


@given(st.floats(0.5, 4.0), st.floats(0.01, 0.99))
def test_logistic_orbit_stays_in_unit_interval(lam, x0):
    x = iterate_logistic(lam, x0, 500)
    assert np.all((x >= 0) & (x <= 1))


def test_period_two_regime():
    x = gen_logistic(LogisticParams(lam=3.2, n_samples=200)).values
    assert np.unique(np.round(x, 6)).size == 2


def test_schedules():
    step = LogisticParams(lam=3.2, lam_post=3.9, t0=100, n_samples=200).schedule()
    assert step[99] == 3.2 and step[100] == 3.9
    sweep = LogisticParams(sweep=(3.0, 4.0), n_samples=11).schedule()
    assert sweep[0] == 3.0 and sweep[-1] == 4.0 and sweep[5] == pytest.approx(3.5)


@pytest.mark.parametrize("kwargs", [{"lam": 4.5}, {"x0": 1.0}, {"noise_sigma": -1.0}, {"t0": 5}])
def test_logistic_params_validation(kwargs):
    with pytest.raises(ValueError):
        LogisticParams(**kwargs)


def test_noise_is_seeded():
    p = LogisticParams(noise_sigma=0.01, n_samples=100)
    assert np.array_equal(gen_logistic(p, 2).values, gen_logistic(p, 2).values)
    assert not np.array_equal(gen_logistic(p, 2).values, gen_logistic(p, 3).values)
    clean = gen_logistic(LogisticParams(n_samples=100)).values
    assert np.std(gen_logistic(p, 2).values - clean) == pytest.approx(0.01, rel=0.2)


@pytest.mark.parametrize("lam", [1.5, 2.5, 2.9])
def test_lyapunov_at_a_stable_fixed_point(lam):
    # the orbit converges to 1 - 1/lam where the slope is 2 - lam
    assert lyapunov_logistic(lam, n_iter=20_000).lambda1 == pytest.approx(math.log(abs(2 - lam)), abs=1e-3)


def test_lyapunov_fully_chaotic_map():
    assert lyapunov_logistic(4.0, n_iter=200_000).lambda1 == pytest.approx(math.log(2), abs=0.01)


def test_lyapunov_signs():
    est = lyapunov_logistic(np.array([3.2, 3.5, 3.9]), n_iter=50_000)
    assert est[0].lambda1 < 0 and est[1].lambda1 < 0
    assert est[2].lambda1 == pytest.approx(0.5, abs=0.1)


# -- EEG ----------------------------------------------------------------------


def test_seizure_epoch_is_much_louder():
    ts = gen_eeg(EEGParams(), seed=0)
    t = ts.timestamps
    ictal = ts.values[(t >= 62) & (t < 77)]
    pre = ts.values[t < 60]
    assert ictal.var() / pre.var() >= 5
    assert ts.N == 140 * 64


def test_zero_length_seizure_is_background_only():
    ts = gen_eeg(EEGParams(seizure_span=(60.0, 60.0)), seed=0)
    assert np.std(ts.values) == pytest.approx(1.0)


def test_eeg_is_seeded():
    assert np.array_equal(gen_eeg(seed=1).values, gen_eeg(seed=1).values)
    assert not np.array_equal(gen_eeg(seed=1).values, gen_eeg(seed=2).values)


# -- protocols ----------------------------------------------------------------


def test_protocol_needs_room():
    with pytest.raises(ValueError):
        TransitionProtocol(t0=50)


@settings(max_examples=5)
@given(st.floats(2.9, 3.9))
def test_sweep_single_value_gives_one_row(lam):
    rows = sweep_logistic([lam], TransitionProtocol(w=20, n=20, t0=100, n_samples=200),
                          trials=1, lyapunov_iter=2000)
    assert len(rows) == 1 and rows[0].lam == lam


def test_sweep_rejects_empty_grid():
    with pytest.raises(ValueError):
        sweep_logistic([])


def test_noise_sweep_is_deterministic():
    proto = TransitionProtocol(w=20, n=20, t0=100, n_samples=200)
    a = noise_sweep([0.0, 0.05], trials=3, protocol=proto, seed=4)
    b = noise_sweep([0.0, 0.05], trials=3, protocol=proto, seed=4)
    assert a == b
    assert [r.sigma for r in a] == [0.0, 0.05]
