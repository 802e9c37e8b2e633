"""
Equilibria of the per-interval derived system and of excitatory rings

Within one delay interval the delayed input is frozen at the previous
pattern, which leaves the ODE

    f_i(u) = -u_i + C0 beta_K sum_j J0_ij tanh(lambda u_j) + C1 beta_K beta1 xi_i
"""

from __future__ import annotations

import itertools
import json
import logging
import math
from pathlib import Path
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg, optimize

import config
from errors import BoundsUnavailableError, InvalidArgumentError
from models import (
    Connectivity,
    CountClass,
    DerivedSystem,
    Equilibrium,
    EquilibriumReport,
    NetworkParams,
    NeuronBounds,
    beta1_from_beta,
)

logger = logging.getLogger(__name__)

ETA_RULES = ("outer_envelope_roots", "stable_region_roots")


class MemoryEigenvalues(NamedTuple):
    sigma_plus: float
    sigma_minus: float


class RingEquilibria(NamedTuple):
    u_star: float
    stable: bool
    only_trivial: bool = False


def memory_gain(beta1):
    """arctanh(beta1)(1 - beta1^2)/beta1, decreasing from 1 to 0 on (0, 1)."""
    beta1 = np.asarray(beta1, dtype=float)
    return np.arctanh(beta1) * (1.0 - beta1 * beta1) / beta1


def memory_eigenvalues(params: NetworkParams) -> MemoryEigenvalues:
    """The two possible linearization eigenvalues at the memory state u* = beta_K beta1 xi."""
    return MemoryEigenvalues(float(params.c0 * memory_gain(params.beta1) - 1.0), -1.0)


# ---------------------------------------------------------------------------
# Derived system
# ---------------------------------------------------------------------------


def derived_system(conn: Connectivity, params: NetworkParams, forcing_pattern: Sequence[int]) -> DerivedSystem:
    xi = np.asarray(forcing_pattern, dtype=float)
    if xi.shape != (conn.n,) or not np.all(np.isin(xi, (-1.0, 1.0))):
        raise InvalidArgumentError("forcing pattern must be a +-1 vector of length N")
    return DerivedSystem(j0=conn.j0, params=params, forcing_pattern=xi)


def rhs(system: DerivedSystem, u: np.ndarray) -> np.ndarray:
    prm = system.params
    return (
        -u
        + prm.c0 * prm.beta_k * system.j0 @ np.tanh(prm.lam * u)
        + prm.c1 * prm.memory_amplitude * system.forcing_pattern
    )


def jacobian(system: DerivedSystem, u: np.ndarray) -> np.ndarray:
    prm = system.params
    sech2 = 1.0 - np.tanh(prm.lam * u) ** 2
    return -np.eye(system.n) + prm.c0 * prm.beta * system.j0 * sech2[None, :]


def memory_state(system: DerivedSystem) -> np.ndarray:
    return system.params.memory_amplitude * system.forcing_pattern


def memory_linearization_spectrum(system: DerivedSystem) -> np.ndarray:
    """Sorted eigenvalues of the Jacobian at u*; C0 beta (1 - beta1^2) J0 - I when J0 xi = xi."""
    return np.sort(np.real(linalg.eigvals(jacobian(system, memory_state(system)))))


# ---------------------------------------------------------------------------
# Turning points and envelopes
# ---------------------------------------------------------------------------


def turning_points(c0: float, beta: float, lam: float, j0_ii: float) -> Optional[Tuple[float, float]]:
    """(p_i, q_i) with tanh^2(lambda u) = (x - 1)/x, x = C0 beta J0_ii; None unless x > 1."""
    if j0_ii < -1e-12:
        raise InvalidArgumentError(f"diagonal of J0 must be non-negative, got {j0_ii}")
    x = c0 * beta * j0_ii
    if x <= 1.0:
        return None
    q = math.atanh(math.sqrt((x - 1.0) / x)) / lam
    return -q, q


def _shift(system: DerivedSystem, i: int) -> float:
    """k_i^+ = C1 beta_K beta1 + C0 beta_K sum_{j != i} |J0_ij|; k_i^- = -k_i^+."""
    prm = system.params
    off = np.abs(system.j0[i]).sum() - abs(system.j0[i, i])
    return prm.c1 * prm.memory_amplitude + prm.c0 * prm.beta_k * off


def _f_bar(system: DerivedSystem, i: int, u):
    prm = system.params
    return -u + prm.c0 * prm.beta_k * system.j0[i, i] * np.tanh(prm.lam * u)


def neuron_bounds(system: DerivedSystem, i: int) -> NeuronBounds:
    prm = system.params
    tp = turning_points(prm.c0, prm.beta, prm.lam, system.j0[i, i])
    if tp is None:
        raise BoundsUnavailableError(f"neuron {i + 1} has no turning points (C0 beta J0_ii <= 1)")
    p_i, q_i = tp
    k = _shift(system, i)
    return NeuronBounds(
        f_check_q=float(_f_bar(system, i, q_i) - k),
        f_hat_p=float(_f_bar(system, i, p_i) + k),
        k_minus=-k,
        k_plus=k,
    )


def envelope_bounds(system: DerivedSystem) -> List[Optional[NeuronBounds]]:
    """Per neuron: f_check(q), f_hat(p) and the shifts k-, k+; None without turning points."""
    out: List[Optional[NeuronBounds]] = []
    for i in range(system.n):
        try:
            out.append(neuron_bounds(system, i))
        except BoundsUnavailableError as exc:
            logger.debug("%s", exc)
            out.append(None)
    return out


def _radius(system: DerivedSystem) -> float:
    """Every equilibrium satisfies |u_i| < radius."""
    prm = system.params
    rows = np.abs(system.j0).sum(axis=1).max()
    return prm.beta_k * (prm.c0 * rows + prm.c1 * prm.beta1) + 1e-3


def _envelope_roots(system: DerivedSystem, i: int, shift: float) -> List[float]:
    r = _radius(system)
    grid = np.linspace(-r, r, config.ENVELOPE_SCAN_POINTS)
    g = lambda u: float(_f_bar(system, i, u) + shift)
    vals = _f_bar(system, i, grid) + shift
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(float(a))
        elif fa * fb < 0.0:
            roots.append(optimize.brentq(g, a, b, xtol=1e-15))
    return roots


def eta_values(system: DerivedSystem, rule: str = "outer_envelope_roots") -> np.ndarray:
    """tanh^2(lambda eta_j) = min(tanh^2(lambda c_j), tanh^2(lambda a_j)).

    outer_envelope_roots: c_j, a_j are the largest-magnitude roots of
    f_check_j and f_hat_j. stable_region_roots: the root of f_check_j nearest
    +inf and of f_hat_j nearest -inf, the inner edges of the outer regions.
    """
    if rule not in ETA_RULES:
        raise InvalidArgumentError(f"unknown eta rule {rule!r}")
    lam = system.params.lam
    out = np.empty(system.n)
    for j in range(system.n):
        k = _shift(system, j)
        lo, hi = _envelope_roots(system, j, -k), _envelope_roots(system, j, k)
        if rule == "outer_envelope_roots":
            c_j, a_j = max(lo, key=abs), max(hi, key=abs)
        else:
            c_j, a_j = max(lo), min(hi)
        out[j] = min(math.tanh(lam * c_j) ** 2, math.tanh(lam * a_j) ** 2)
    return out


def count_equilibria(system: DerivedSystem, eta_rule: str = "outer_envelope_roots") -> EquilibriumReport:
    prm = system.params
    diag = prm.c0 * prm.beta * np.diag(system.j0)
    tps = [turning_points(prm.c0, prm.beta, prm.lam, d) for d in np.diag(system.j0)]
    bounds = envelope_bounds(system)
    h1 = [bool(x > 1.0) for x in diag]
    h2 = [b is not None and b.f_check_q > 0.0 and b.f_hat_p < 0.0 for b in bounds]
    t2 = eta_values(system, eta_rule)
    contraction = prm.c0 * prm.beta * np.abs(system.j0) @ (1.0 - t2)
    h3 = [bool(x < 1.0) for x in contraction]

    if np.all(diag <= 1.0):
        cls = CountClass.ONE
    elif all(h1) and all(h2):
        cls = CountClass.THREE_TO_THE_N
    else:
        cls = CountClass.ONE_OR_THREE
    report = EquilibriumReport(
        count_class=cls,
        stable_two_to_the_n=cls is CountClass.THREE_TO_THE_N and all(h3),
        turning_points=tps,
        h1=h1,
        h2=h2,
        h3=h3,
        eta_rule=eta_rule,
    )
    logger.debug("equilibrium class %s (H1=%s H2=%s H3=%s)", cls.value, h1, h2, h3)
    return report


def locate_equilibria(system: DerivedSystem) -> Optional[List[Equilibrium]]:
    """All equilibria for N <= ENUMERATION_MAX_NEURONS, None above.

    Seeds are spread over the boxes cut by the turning points of each
    coordinate; fsolve polishes them and duplicates are merged.
    """
    if system.n > config.ENUMERATION_MAX_NEURONS:
        logger.warning("equilibrium enumeration skipped for N=%d > %d", system.n, config.ENUMERATION_MAX_NEURONS)
        return None
    prm = system.params
    r = _radius(system)
    axes = []
    for i in range(system.n):
        tp = turning_points(prm.c0, prm.beta, prm.lam, system.j0[i, i])
        cuts = [-r, r] if tp is None else [-r, tp[0], tp[1], r]
        pts = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            pts.extend(np.linspace(a, b, 5)[1:-1])
        axes.append(pts)

    found: List[np.ndarray] = []
    f = lambda u: rhs(system, u)
    fp = lambda u: jacobian(system, u)
    for seed in itertools.product(*axes):
        sol, info, ier, _ = optimize.fsolve(f, np.array(seed), fprime=fp, full_output=True, xtol=1e-13)
        if ier != 1 or np.abs(f(sol)).max() > 1e-10:
            continue
        if all(np.abs(sol - q).max() > 1e-8 for q in found):
            found.append(sol)
    found.sort(key=lambda u: tuple(u))
    return [
        Equilibrium(u=u, stable=bool(np.all(np.real(linalg.eigvals(jacobian(system, u))) < 0.0)))
        for u in found
    ]


# ---------------------------------------------------------------------------
# Saddle-node curve of the memory state
# ---------------------------------------------------------------------------


def saddle_node_residual(beta: float, c0: float, beta1: Optional[float] = None) -> float:
    """arctanh(sqrt((x-1)/x)) - sqrt(x(x-1)) + C1 arctanh(beta1), x = C0 beta > 1."""
    x = c0 * beta
    if x <= 1.0:
        raise InvalidArgumentError(f"saddle-node residual needs C0 beta > 1, got {x}")
    b1 = beta1_from_beta(beta) if beta1 is None else beta1
    return math.atanh(math.sqrt((x - 1.0) / x)) - math.sqrt(x * (x - 1.0)) + (1.0 - c0) * math.atanh(b1)


def saddle_node_curve(beta_grid: Sequence[float]) -> np.ndarray:
    """Rows (beta, C0*) where the memory state meets a saddle (bisection in C0 on (1/beta, 1])."""
    rows = []
    for beta in np.asarray(beta_grid, dtype=float):
        if not 1.0 < beta <= 5.0:
            raise InvalidArgumentError(f"saddle-node curve is traced for beta in (1, 5], got {beta}")
        b1 = beta1_from_beta(beta)
        g = lambda c0: saddle_node_residual(beta, c0, b1)
        lo, hi = (1.0 / beta) * (1.0 + 1e-12), config.SN_C0_UPPER
        if g(lo) * g(hi) > 0.0:
            logger.debug("no saddle-node crossing at beta=%g", beta)
            continue
        rows.append((beta, optimize.brentq(g, lo, hi, xtol=1e-15)))
    if not rows:
        logger.warning("saddle-node curve is empty on the given grid")
    return np.array(rows, dtype=float).reshape(-1, 2)


def sn_curve_to_csv(curve: np.ndarray, path: Union[str, Path]) -> None:
    lines = ["beta,c0_star"] + [f"{b:.10g},{c:.10g}" for b, c in curve]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def report_to_json(report: EquilibriumReport, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")


# ---------------------------------------------------------------------------
# Excitatory rings
# ---------------------------------------------------------------------------


def ring_fixed_point(beta: float, lam: float) -> RingEquilibria:
    """Positive root of x = beta_K tanh(lambda x), beta_K = beta / lambda."""
    if beta <= 1.0:
        return RingEquilibria(u_star=0.0, stable=True, only_trivial=True)
    beta_k = beta / lam
    h = lambda x: x - beta_k * math.tanh(lam * x)
    u = optimize.brentq(h, beta_k * 1e-12, beta_k, xtol=1e-16, rtol=4 * np.finfo(float).eps)
    sech2 = 1.0 - math.tanh(lam * u) ** 2
    return RingEquilibria(u_star=u, stable=beta < 1.0 / sech2)


def ring_equilibria(params: NetworkParams) -> RingEquilibria:
    """Symmetric equilibria {0, +u*, -u*} of the excitatory ring; stable iff beta < 1/(1 - tanh^2(lambda u*))."""
    return ring_fixed_point(params.beta, params.lam)


def ring_linearization_spectrum(params: NetworkParams, n: int, u_star: Optional[float] = None) -> np.ndarray:
    """Eigenvalues at the uniform state u* of -u + beta_K (C0 I + C1 R) tanh(lambda u), R the ring shift."""
    if u_star is None:
        u_star = ring_equilibria(params).u_star
    ring = np.roll(np.eye(n), 1, axis=1)
    sech2 = 1.0 - math.tanh(params.lam * u_star) ** 2
    mat = -np.eye(n) + params.beta * sech2 * (params.c0 * np.eye(n) + params.c1 * ring)
    return linalg.eigvals(mat)
