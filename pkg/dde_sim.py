"""
Fixed-step integration of the delayed network and retrieval bookkeeping

    u'(t) = -u(t) + C0 beta_K J0 tanh(lambda u(t)) + C1 beta_K J tanh(lambda u(t - tau))
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import signal

import config
from errors import IntegrationDivergedError, InvalidArgumentError, InvalidStepError
from models import BinaryCycle, Connectivity, NetworkParams, RetrievalReport, Trajectory

logger = logging.getLogger(__name__)

SignVector = Optional[Tuple[int, ...]]


def firing_rates(u: np.ndarray, lam: float) -> np.ndarray:
    return np.tanh(lam * np.asarray(u, dtype=float))


def steps_per_delay(tau: float, dt: float) -> int:
    """Number of steps in one delay; raises InvalidStepError unless dt divides tau."""
    ratio = tau / dt
    m = int(round(ratio))
    if m < 1 or abs(ratio - m) > config.STEP_ALIGNMENT_RTOL * max(1.0, ratio):
        raise InvalidStepError(f"dt={dt} does not divide tau={tau}")
    return m


def default_dt(tau: float) -> float:
    return tau / config.DEFAULT_STEPS_PER_DELAY if tau > 0 else config.DEFAULT_ODE_DT


def random_initial(n: int, scale: float, rng: np.random.Generator) -> np.ndarray:
    """Constant history with entries uniform in [-scale, scale]."""
    return rng.uniform(-scale, scale, size=n)


def simulate(
    conn: Connectivity,
    params: NetworkParams,
    t_end: float,
    dt: Optional[float] = None,
    pattern: Optional[Sequence[int]] = None,
    a: Optional[float] = None,
    phi: Optional[np.ndarray] = None,
) -> Trajectory:
    """Integrate from the constant history phi on [-tau, 0] with classical RK4.

    phi defaults to a * pattern, with pattern the first column of the stored
    cycle and a = beta_K beta1. Delayed values at grid nodes are stored
    samples; the half-step stages use the cubic Hermite interpolant of the
    two neighbouring samples and their slopes.
    """
    tau = params.tau
    dt = default_dt(tau) if dt is None else float(dt)
    if dt <= 0 or t_end <= 0:
        raise InvalidArgumentError(f"dt and t_end must be positive, got dt={dt}, t_end={t_end}")
    if phi is None:
        xi = conn.source_cycle.column(0) if pattern is None else np.asarray(pattern, dtype=float)
        amp = params.memory_amplitude if a is None else a
        if amp <= 0:
            raise InvalidArgumentError(f"initial amplitude must be positive, got {amp}")
        phi = amp * xi
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (conn.n,):
        raise InvalidArgumentError(f"initial state has shape {phi.shape}, expected ({conn.n},)")

    m = steps_per_delay(tau, dt) if tau > 0 else 0
    n_steps = int(math.ceil(t_end / dt - 1e-9))
    lam = params.lam
    a0 = params.c0 * params.beta_k * conn.j0
    a1 = params.c1 * params.beta_k * conn.j

    def rhs(u, u_delayed):
        return -u + a0 @ np.tanh(lam * u) + a1 @ np.tanh(lam * u_delayed)

    u = np.empty((n_steps + 1, conn.n))
    slope = np.empty_like(u)
    u[0] = phi
    half = 0.5 * dt

    def delayed_node(k):
        return phi if k - m < 0 else u[k - m]

    def delayed_mid(k):
        i = k - m
        if i < 0:
            return phi
        return 0.5 * (u[i] + u[i + 1]) + dt * (slope[i] - slope[i + 1]) / 8.0

    for k in range(n_steps):
        x = u[k]
        k1 = rhs(x, delayed_node(k) if m else x)
        slope[k] = k1
        if m:
            # slope[k] must be stored before the midpoint lookup when m == 1
            dm, d1 = delayed_mid(k), delayed_node(k + 1)
            k2 = rhs(x + half * k1, dm)
            k3 = rhs(x + half * k2, dm)
            k4 = rhs(x + dt * k3, d1)
        else:
            k2 = rhs(x + half * k1, x + half * k1)
            k3 = rhs(x + half * k2, x + half * k2)
            k4 = rhs(x + dt * k3, x + dt * k3)
        u[k + 1] = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(u[k + 1])):
            raise IntegrationDivergedError(f"state became non-finite at t={(k + 1) * dt:.6g} ms")
    times = np.arange(n_steps + 1) * dt
    logger.debug("integrated %d steps (dt=%g, tau=%g)", n_steps, dt, tau)
    return Trajectory(times=times, u=u, v=firing_rates(u, lam), phi=phi, tau=tau, dt=dt, lam=lam)


# ---------------------------------------------------------------------------
# Sign sequences and the transition conditions
# ---------------------------------------------------------------------------


def _signs(u: np.ndarray) -> np.ndarray:
    return np.sign(u).astype(int)


def extract_sign_sequence(
    traj: Trajectory,
    params: Optional[NetworkParams] = None,
    settle_fraction: float = config.DEFAULT_SETTLE_FRACTION,
) -> List[SignVector]:
    """One entry per delay interval [n tau, (n+1) tau).

    The leading settle_fraction of each interval is skipped; an interval whose
    remaining samples do not share one strict sign pattern is None.
    """
    tau = traj.tau if params is None else params.tau
    if tau <= 0:
        raise InvalidArgumentError("interval sign sequences need tau > 0")
    if not 0.0 <= settle_fraction < 1.0:
        raise InvalidArgumentError(f"settle_fraction must lie in [0, 1), got {settle_fraction}")
    m = steps_per_delay(tau, traj.dt)
    skip = min(int(math.ceil(settle_fraction * m)), m - 1)
    n_intervals = (len(traj.times) - 1) // m
    signs = _signs(traj.u)
    seq: List[SignVector] = []
    for n in range(n_intervals):
        block = signs[n * m + skip:(n + 1) * m]
        first = block[0]
        if np.any(first == 0) or np.any(block != first):
            seq.append(None)
        else:
            seq.append(tuple(int(x) for x in first))
    return seq


def extract_pattern_sequence(
    traj: Trajectory,
    min_dwell: Optional[float] = None,
    skip_initial: bool = True,
    stall_time: Optional[float] = None,
) -> List[SignVector]:
    """Order in which strict sign patterns are visited.

    Sample-wise patterns are run-length collapsed; runs shorter than
    min_dwell (default half a delay) are dropped and equal neighbours merged.
    The run holding the initial state at t = 0 is exempt from the dwell
    filter and, when skip_initial is set, left out of the result so the
    sequence lines up with check_retrieval. When the last run lasts at least
    stall_time, a None entry marks the missing next transition.
    """
    if min_dwell is None:
        if traj.tau <= 0:
            raise InvalidArgumentError("min_dwell is required when tau = 0")
        min_dwell = config.DEFAULT_MIN_DWELL_FRACTION * traj.tau
    signs = _signs(traj.u)
    strict = np.all(signs != 0, axis=1)
    runs: List[Tuple[Tuple[int, ...], float, float]] = []
    for k in np.flatnonzero(strict):
        pat = tuple(int(x) for x in signs[k])
        t = float(traj.times[k])
        if runs and runs[-1][0] == pat:
            runs[-1] = (pat, runs[-1][1], t)
        else:
            runs.append((pat, t, t))
    # the initial pattern may be left well before min_dwell
    has_initial = bool(strict[0]) and bool(runs)
    kept: List[Tuple[Tuple[int, ...], float, float]] = []
    for i, (pat, t0, t1) in enumerate(runs):
        if t1 - t0 + traj.dt < min_dwell and not (has_initial and i == 0):
            continue
        if kept and kept[-1][0] == pat:
            kept[-1] = (pat, kept[-1][1], t1)
        else:
            kept.append((pat, t0, t1))
    seq: List[SignVector] = [pat for pat, _, _ in kept]
    if skip_initial and has_initial:
        seq = seq[1:]
    if stall_time is not None and kept and kept[-1][2] - kept[-1][1] >= stall_time:
        seq.append(None)
    return seq


def check_retrieval(
    seq: Sequence[SignVector],
    cycle: BinaryCycle,
    start_index: int = 0,
    aligned: bool = True,
) -> RetrievalReport:
    """Leading run of entries n with seq[n] equal to pattern (start_index + n + 1) mod p.

    start_index is 0-based. aligned only labels the report; the test is the
    same for interval sequences and visiting-order sequences.
    """
    p = cycle.period
    matched = 0
    failure: Optional[int] = None
    for n, got in enumerate(seq):
        expected = tuple(int(x) for x in cycle.column((start_index + n + 1) % p))
        if got is None or tuple(got) != expected:
            failure = n
            break
        matched += 1
    return RetrievalReport(
        sign_sequence=list(seq),
        matched_count=matched,
        full_traversals=matched // p,
        first_failure_interval=failure,
        start_index=start_index,
        aligned=aligned,
    )


def overlap(traj: Trajectory, cycle: BinaryCycle) -> np.ndarray:
    """m_mu(t) = xi^(mu) . v(t) / N, shape (len(times), p)."""
    return traj.v @ cycle.sigma / cycle.n_neurons


# ---------------------------------------------------------------------------
# Oscillation measures
# ---------------------------------------------------------------------------


def estimate_period(traj: Trajectory, neuron: int = 0, t_from: float = 0.0) -> Optional[float]:
    """Mean peak-to-peak spacing of u_neuron after t_from, or None."""
    mask = traj.times >= t_from
    x = traj.u[mask, neuron]
    t = traj.times[mask]
    if x.size < 3 or np.ptp(x) == 0.0:
        return None
    peaks, _ = signal.find_peaks(x, prominence=0.25 * np.ptp(x))
    if len(peaks) < 2:
        return None
    return float(np.mean(np.diff(t[peaks])))


def oscillation_amplitude(traj: Trajectory, t_from: float = 0.0) -> float:
    return float(np.abs(traj.u[traj.times >= t_from]).max())


def last_sign_change(traj: Trajectory) -> float:
    """Time of the last sample at which any component of u changed sign."""
    s = _signs(traj.u)
    changed = np.flatnonzero(np.any(s[1:] != s[:-1], axis=1))
    return 0.0 if changed.size == 0 else float(traj.times[changed[-1] + 1])


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def write_trajectory_csv(traj: Trajectory, path: Union[str, Path]) -> None:
    n = traj.n
    header = ",".join(["t"] + [f"u{i}" for i in range(1, n + 1)] + [f"v{i}" for i in range(1, n + 1)])
    data = np.column_stack([traj.times, traj.u, traj.v])
    np.savetxt(path, data, delimiter=",", header=header, comments="", fmt="%.10g")


def write_raster_csv(seq: Sequence[SignVector], n: int, path: Union[str, Path]) -> None:
    """Rows interval,neuron,sign; unresolved intervals carry sign 0."""
    lines = ["interval,neuron,sign"]
    for k, pat in enumerate(seq):
        for i in range(n):
            lines.append(f"{k},{i + 1},{0 if pat is None else pat[i]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def report_to_json(report: RetrievalReport, path: Union[str, Path], extra: Optional[dict] = None) -> None:
    data = report.to_dict()
    if extra:
        data.update(extra)
    Path(path).write_text(json.dumps(data, indent=2), encoding="utf-8")
