"""
Delay integration, sign sequences, retrieval check and oscillation measures
"""

import os
import tempfile

import numpy as np
import pytest

from cycle_fixtures import antisym, conn, non_mc, params, random_simple
from dde_sim import (
    check_retrieval,
    estimate_period,
    extract_pattern_sequence,
    extract_sign_sequence,
    firing_rates,
    last_sign_change,
    oscillation_amplitude,
    overlap,
    random_initial,
    simulate,
    steps_per_delay,
    write_raster_csv,
    write_trajectory_csv,
)
from errors import IntegrationDivergedError, InvalidArgumentError, InvalidStepError
from models import Connectivity, Trajectory


def _uncoupled(n=3):
    cycle = antisym()
    return Connectivity(j0=np.zeros((n, n)), j=np.zeros((n, n)), source_cycle=cycle)


def _synthetic(u, dt=0.1, tau=1.0, lam=10.0):
    u = np.asarray(u, dtype=float)
    times = np.arange(len(u)) * dt
    return Trajectory(times=times, u=u, v=np.tanh(lam * u), phi=u[0], tau=tau, dt=dt, lam=lam)


def test_firing_rates():
    assert np.all(firing_rates(np.zeros(3), 20.0) == 0.0)
    lam = 10.0
    assert abs(firing_rates(np.arctanh(0.9) / lam, lam) - 0.9) < 1e-12
    prm = params(c0=0.0, beta=3.0, lam=20.0)
    v = firing_rates(prm.memory_amplitude * antisym().column(0), prm.lam)
    np.testing.assert_allclose(v, prm.beta1 * antisym().column(0), atol=1e-12)


def test_steps_per_delay():
    assert steps_per_delay(10.0, 0.1) == 100
    assert steps_per_delay(2.0, 0.02) == 100
    with pytest.raises(InvalidStepError):
        steps_per_delay(1.0, 0.3)
    with pytest.raises(InvalidArgumentError):
        steps_per_delay(1.0, 3.0)


def test_pure_decay():
    phi = np.array([0.5, -0.2, 0.1])
    for tau in (0.0, 1.0):
        traj = simulate(_uncoupled(), params(c0=0.3, tau=tau), t_end=5.0, dt=0.01, phi=phi)
        np.testing.assert_allclose(traj.u[-1], phi * np.exp(-5.0), atol=1e-8)


def test_misaligned_step_is_rejected():
    with pytest.raises(InvalidStepError):
        simulate(conn(antisym()), params(tau=1.0), t_end=5.0, dt=0.3)


def test_divergence_is_reported():
    with pytest.raises(IntegrationDivergedError):
        simulate(_uncoupled(), params(c0=0.0, tau=0.0), t_end=6000.0, dt=100.0, phi=np.ones(3))


def test_trajectory_invariants():
    prm = params(c0=0.0, beta=3.0, lam=20.0, tau=10.0)
    traj = simulate(conn(antisym()), prm, t_end=60.0, dt=0.1)
    np.testing.assert_allclose(traj.v, np.tanh(prm.lam * traj.u), atol=1e-12)
    assert np.all(np.abs(traj.v) < 1.0)
    assert traj.times[0] == 0.0
    np.testing.assert_allclose(np.diff(traj.times), 0.1, atol=1e-12)
    np.testing.assert_allclose(traj.u[0], prm.memory_amplitude * antisym().column(0))


def test_sign_flip_symmetry():
    c = conn(random_simple())
    prm = params(c0=0.2, beta=3.0, lam=20.0, tau=5.0)
    phi = random_initial(c.n, 0.1, np.random.default_rng(2))
    up = simulate(c, prm, t_end=50.0, dt=0.05, phi=phi)
    down = simulate(c, prm, t_end=50.0, dt=0.05, phi=-phi)
    np.testing.assert_allclose(down.u, -up.u, atol=1e-12)


def test_solutions_stay_bounded():
    c = conn(antisym())
    prm = params(c0=0.5, beta=3.0, lam=10.0, tau=2.0)
    phi = np.array([0.4, -0.4, 0.4])
    traj = simulate(c, prm, t_end=80.0, dt=0.02, phi=phi)
    bound = prm.beta_k * (prm.c0 * np.abs(c.j0).sum(axis=1).max() + prm.c1 * np.abs(c.j).sum(axis=1).max())
    late = traj.u[traj.times > 20.0]
    assert np.abs(late).max() <= max(np.abs(phi).max(), bound) + 1e-9


def test_constant_state_gives_constant_sequence():
    cycle = antisym()
    c = Connectivity(j0=np.eye(3), j=np.eye(3), source_cycle=cycle)
    prm = params(c0=0.4, beta=3.0, lam=10.0, tau=2.0)
    traj = simulate(c, prm, t_end=20.0, dt=0.02, pattern=cycle.column(0))
    np.testing.assert_allclose(traj.u, np.broadcast_to(traj.u[0], traj.u.shape), atol=1e-12)
    seq = extract_sign_sequence(traj, prm)
    assert len(seq) == 10
    assert all(s == tuple(cycle.column(0)) for s in seq)


def test_sign_sequence_needs_delay():
    traj = _synthetic(np.ones((10, 2)), tau=0.0)
    with pytest.raises(InvalidArgumentError):
        extract_sign_sequence(traj)


def test_unresolved_interval_is_none():
    u = np.ones((21, 1))
    u[15] = -1.0
    traj = _synthetic(u, dt=0.1, tau=1.0)
    assert extract_sign_sequence(traj, settle_fraction=0.2) == [(1,), None]


def test_sign_sequence_with_one_sample_per_delay():
    traj = _synthetic([[1.0], [-1.0], [1.0], [1.0]], dt=1.0, tau=1.0)
    assert extract_sign_sequence(traj) == [(1,), (-1,), (1,)]
    prm = params(tau=1.0)
    seq = extract_sign_sequence(simulate(conn(antisym()), prm, t_end=5.0, dt=1.0), prm)
    assert len(seq) == 5


def test_settle_fraction_near_one_keeps_last_sample():
    u = np.ones((21, 1))
    u[9] = -1.0
    traj = _synthetic(u, dt=0.1, tau=1.0)
    assert extract_sign_sequence(traj, settle_fraction=0.999) == [(-1,), (1,)]


def test_short_initial_run_is_still_skipped():
    block = lambda pat, k: [pat] * k
    rows = block([0.1, 0.1], 2) + block([-0.1, 0.1], 30) + block([-0.1, -0.1], 30)
    traj = _synthetic(rows, dt=0.1, tau=2.0)
    assert extract_pattern_sequence(traj) == [(-1, 1), (-1, -1)]
    assert extract_pattern_sequence(traj, skip_initial=False) == [(1, 1), (-1, 1), (-1, -1)]


def test_check_retrieval_perfect_sequence():
    cycle = antisym()
    seq = [tuple(cycle.column(n + 1)) for n in range(24)]
    report = check_retrieval(seq, cycle)
    assert report.matched_count == 24
    assert report.full_traversals == 4
    assert report.first_failure_interval is None


def test_check_retrieval_reports_first_failure():
    cycle = antisym()
    seq = [tuple(cycle.column(n + 1)) for n in range(24)]
    seq[7] = tuple(-x for x in seq[7])
    report = check_retrieval(seq, cycle)
    assert report.matched_count == 7
    assert report.first_failure_interval == 7
    assert report.full_traversals == 1
    assert check_retrieval([None], cycle).first_failure_interval == 0


def test_check_retrieval_start_index():
    cycle = antisym()
    seq = [tuple(cycle.column(3 + n + 1)) for n in range(6)]
    assert check_retrieval(seq, cycle, start_index=3).matched_count == 6
    assert check_retrieval(seq, cycle, start_index=0).matched_count == 0


def test_pattern_sequence_drops_short_runs():
    block = lambda pat, k: [pat] * k
    rows = (
        block([0.1, 0.1], 30)
        + block([0.1, -0.1], 2)  # glitch shorter than min_dwell
        + block([-0.1, 0.1], 30)
        + block([0.0, 0.1], 3)  # not a strict pattern
        + block([-0.1, -0.1], 30)
    )
    traj = _synthetic(rows, dt=0.1, tau=2.0)
    seq = extract_pattern_sequence(traj)
    assert seq == [(-1, 1), (-1, -1)]
    assert extract_pattern_sequence(traj, skip_initial=False)[0] == (1, 1)
    assert extract_pattern_sequence(traj, stall_time=2.0)[-1] is None
    assert extract_pattern_sequence(traj, stall_time=10.0)[-1] == (-1, -1)


def test_overlap_of_stored_rates():
    cycle = antisym()
    lam, beta1 = 10.0, 0.8
    u = np.array([np.arctanh(beta1 * cycle.column(mu)) / lam for mu in range(6)])
    m = overlap(_synthetic(u, lam=lam), cycle)
    for mu in range(6):
        assert abs(m[mu, mu] - beta1) < 1e-12
        for nu in range(6):
            expected = beta1 * cycle.column(nu) @ cycle.column(mu) / 3
            assert abs(m[mu, nu] - expected) < 1e-12


def test_overlap_vanishes_off_the_column_space():
    cycle = non_mc()
    lam = 10.0
    v = 0.5 * np.array([1.0, 0.0, -1.0])
    u = np.tile(np.arctanh(v) / lam, (4, 1))
    assert np.abs(overlap(_synthetic(u, lam=lam), cycle)).max() < 1e-12


def test_period_and_amplitude_of_a_sine():
    t = np.arange(0, 200.0, 0.05)
    u = np.column_stack([0.3 * np.sin(2 * np.pi * t / 25.0), np.zeros_like(t)])
    traj = _synthetic(u, dt=0.05, tau=0.0)
    assert abs(estimate_period(traj, neuron=0) - 25.0) < 0.1
    assert estimate_period(traj, neuron=1) is None
    assert abs(oscillation_amplitude(traj, t_from=100.0) - 0.3) < 1e-3


def test_last_sign_change():
    u = np.ones((50, 2))
    u[20:, 1] = -1.0
    traj = _synthetic(u, dt=0.5)
    assert last_sign_change(traj) == 10.0
    assert last_sign_change(_synthetic(np.ones((5, 2)))) == 0.0


def test_random_initial_is_seeded():
    a = random_initial(6, 0.05, np.random.default_rng(9))
    b = random_initial(6, 0.05, np.random.default_rng(9))
    assert np.array_equal(a, b)
    assert np.all(np.abs(a) <= 0.05)


def test_step_halving_error_ratio():
    # with C0 = 0 the first delay interval is a linear ODE with constant forcing
    c = conn(random_simple())
    prm = params(c0=0.0, beta=3.0, lam=20.0, tau=10.0)
    ends = [simulate(c, prm, t_end=5.0, dt=dt).u[-1] for dt in (0.5, 0.25, 0.125)]
    e1 = np.abs(ends[0] - ends[1]).max()
    e2 = np.abs(ends[1] - ends[2]).max()
    assert 8.0 <= e1 / e2 <= 32.0


def test_step_halving_error_ratio_past_the_delay():
    # beyond t = tau the delayed term is read between nodes in the half-step stages
    c = conn(random_simple())
    prm = params(c0=0.3, beta=3.0, lam=20.0, tau=10.0)
    for t_end in (25.0, 45.0):
        ends = [simulate(c, prm, t_end=t_end, dt=dt).u[-1] for dt in (0.5, 0.25, 0.125)]
        e1 = np.abs(ends[0] - ends[1]).max()
        e2 = np.abs(ends[1] - ends[2]).max()
        assert 6.0 <= e1 / e2 <= 32.0, (t_end, e1 / e2)


def test_csv_exports():
    prm = params(c0=0.0, beta=3.0, lam=20.0, tau=1.0)
    traj = simulate(conn(antisym()), prm, t_end=3.0, dt=0.1)
    seq = extract_sign_sequence(traj, prm)
    with tempfile.TemporaryDirectory() as tmp:
        tpath = os.path.join(tmp, "trajectory.csv")
        rpath = os.path.join(tmp, "raster.csv")
        write_trajectory_csv(traj, tpath)
        write_raster_csv(seq + [None], 3, rpath)
        with open(tpath) as fh:
            lines = fh.read().splitlines()
        with open(rpath) as fh:
            raster = fh.read().splitlines()
    assert lines[0] == "t,u1,u2,u3,v1,v2,v3"
    assert len(lines) == len(traj.times) + 1
    assert raster[0] == "interval,neuron,sign"
    assert len(raster) == 1 + 3 * (len(seq) + 1)
    assert raster[-1].endswith(",0")
