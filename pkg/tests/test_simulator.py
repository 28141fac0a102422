import math

import numpy as np
import pytest

from cdfnav.controller import CdfConfig
from cdfnav.density import DensityFunction, ShapingFunction
from cdfnav.dynamics import duffing, single_integrator
from cdfnav.simulator import (
    CONVERGED, UNSAFE, BoxSampler, CircleSampler, DubinState, dubin_steering,
    monte_carlo_sweep, simulate, simulate_dubin, wrap_angle,
)


def test_wrap_angle_range():
    assert wrap_angle(math.pi) == math.pi
    assert wrap_angle(-math.pi) == math.pi
    assert wrap_angle(3 * math.pi / 2) == pytest.approx(-math.pi / 2)
    for a in np.linspace(-20, 20, 101):
        w = wrap_angle(a)
        assert -math.pi < w <= math.pi
        assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-12)


def test_nominal_single_euler_step():
    df = DensityFunction([], ShapingFunction((5.0, 5.0), None, 0.2), 0.1)
    cfg = CdfConfig(dt=0.1, horizon_steps=1, mode="nominal", u_nominal=lambda x: np.array([1.0, 0.0]))
    traj = simulate(single_integrator(2), df, cfg, [0.0, 0.0])
    assert np.allclose(traj.states[-1], [0.1, 0.0])
    assert traj.outcome == "timeout"
    assert traj.times[-1] == pytest.approx(0.1)


def test_unsafe_initial_state(duffing_density):
    traj = simulate(duffing(), duffing_density, CdfConfig(beta=0.01), [0.1, 0.1])
    assert traj.outcome == UNSAFE
    assert len(traj.states) == 1
    assert traj.min_clearance <= 0
    assert traj.unsafe_dwell_time > 0


@pytest.mark.parametrize("u, v, theta_tilde", [
    ((1.0, 0.0), 1.0, 0.0),
    ((0.0, 2.0), 2.0, math.pi / 2),
    ((-1.0, 0.0), 1.0, math.pi),
    ((-1.0, -0.0), 1.0, math.pi),
])
def test_dubin_steering_speed_and_heading(u, v, theta_tilde):
    vv, omega, ds = dubin_steering(u, DubinState(0.0, 0.0, 0.0, 10.0), 0.01)
    assert vv == pytest.approx(v)
    assert ds.theta_tilde_prev == pytest.approx(theta_tilde)


def test_dubin_steering_aligned_heading_gives_zero_turn():
    ds = DubinState(0.0, 0.0, 0.3, 10.0, theta_tilde_prev=0.3)
    _, omega, _ = dubin_steering((math.cos(0.3), math.sin(0.3)), ds, 0.01)
    assert omega == pytest.approx(0.0, abs=1e-12)


def test_dubin_steering_large_heading_error():
    ds = DubinState(0.0, 0.0, math.pi / 2, 10.0, theta_tilde_prev=0.0)
    _, omega, _ = dubin_steering((1.0, 0.0), ds, 0.01)
    assert omega == pytest.approx(-5 * math.pi)


def test_dubin_steering_wraps_reference_rate():
    # reference crosses the +-pi seam: rate must be small, not ~2 pi / dt
    ds = DubinState(0.0, 0.0, math.pi - 0.01, 10.0, theta_tilde_prev=math.pi - 0.01)
    _, omega, new = dubin_steering((math.cos(-math.pi + 0.01), math.sin(-math.pi + 0.01)), ds, 0.01)
    assert abs(omega) < 5.0


def test_dubin_steering_zero_command_holds_reference():
    ds = DubinState(0.0, 0.0, 0.2, 10.0, theta_tilde_prev=0.5)
    v, omega, new = dubin_steering((0.0, 0.0), ds, 0.01)
    assert v == 0.0
    assert new.theta_tilde_prev == 0.5
    assert omega == pytest.approx(-10 * (0.2 - 0.5))


def test_dubin_run(dubin_density):
    traj = simulate_dubin(dubin_density, CdfConfig(beta=0.1), (0.0, 0.0), 0.0, k_gain=10.0)
    assert traj.outcome == CONVERGED
    assert traj.min_clearance > 0
    assert traj.states.shape[1] == 3
    assert np.all(traj.controls[:, 0] >= 0)
    assert traj.terminal_distance <= dubin_density.eta


def test_sweep_count_one_matches_simulate(duffing_density):
    cfg = CdfConfig(beta=0.01, infeasibility_policy="slack", horizon_steps=300)
    sampler = CircleSampler((0.0, 0.0), 2.5)
    rep = monte_carlo_sweep(duffing(), duffing_density, cfg, sampler, 1, 42, keep_trajectories=True)
    big = monte_carlo_sweep(duffing(), duffing_density, cfg, sampler, 3, 42, keep_trajectories=True)
    direct = simulate(duffing(), duffing_density, cfg, rep.initial_states[0])
    assert np.array_equal(rep.initial_states[0], big.initial_states[0])
    assert np.array_equal(rep.trajectories[0].states, direct.states)
    assert rep.outcomes[0] == direct.outcome


def test_sweep_is_deterministic(duffing_density):
    cfg = CdfConfig(beta=0.01, infeasibility_policy="slack", horizon_steps=200)
    sampler = BoxSampler((-2.5, -2.5), (2.5, 2.5))
    a = monte_carlo_sweep(duffing(), duffing_density, cfg, sampler, 4, 7, keep_trajectories=True)
    b = monte_carlo_sweep(duffing(), duffing_density, cfg, sampler, 4, 7, keep_trajectories=True)
    for ta, tb in zip(a.trajectories, b.trajectories):
        assert np.array_equal(ta.states, tb.states)
        assert np.array_equal(ta.controls, tb.controls)


def test_sweep_rejects_zero_count(duffing_density):
    with pytest.raises(ValueError, match="count"):
        monte_carlo_sweep(duffing(), duffing_density, CdfConfig(), CircleSampler((0, 0), 2.5), 0, 1)


def test_sampler_redraws_unsafe_points(duffing_density):
    rep_states = BoxSampler((-0.4, -0.4), (0.6, 0.6))
    from cdfnav.simulator import sample_initial_states
    xs = sample_initial_states(duffing_density, rep_states, 20, 3)
    assert all(duffing_density.clearance(x) > 0 for x in xs)


def test_qp_integrator_rate_law():
    # min-norm control gives dV/dt = -(beta/alpha) V, so the time to reach
    # |x| = eta is 2 (alpha/beta) ln(|x0|/eta) in continuous time
    for alpha in (0.2, 0.4):
        df = DensityFunction([], ShapingFunction((0.0, 0.0), None, alpha), 0.1)
        traj = simulate(single_integrator(2), df, CdfConfig(beta=0.1, horizon_steps=10000), [2.0, 0.0])
        expected = 2 * (alpha / 0.1) * math.log(2.0 / 0.1)
        assert traj.outcome == CONVERGED
        assert traj.time_to_target == pytest.approx(expected, abs=0.05)


def test_euler_consistency(duffing_density):
    # fixed horizon, halving dt: differences shrink roughly linearly
    T = 1.0
    finals = []
    for dt in (0.01, 0.005, 0.0025):
        cfg = CdfConfig(beta=0.01, dt=dt, horizon_steps=int(round(T / dt)), infeasibility_policy="slack")
        finals.append(simulate(duffing(), duffing_density, cfg, [-2.0, 0.5]).states[-1])
    e1 = np.linalg.norm(finals[0] - finals[1])
    e2 = np.linalg.norm(finals[1] - finals[2])
    assert e2 < e1
    assert 2 / 4 <= e1 / e2 <= 2 * 4
