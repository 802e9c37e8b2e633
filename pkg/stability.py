"""
Linear stability of the trivial solution and its local bifurcation curves.

Every selected index n contributes the factor

    F(s) = s + a - b exp(-s),  a = tau (1 - C0 beta),  b = tau C1 beta exp(2 pi i n / p)

of the characteristic equation of the delay-rescaled system, so roots are
measured in units of 1/tau. With tau = 0 the closed-form eigenvalue of the
undelayed network is returned instead.
"""

from __future__ import annotations

import logging
import math
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq
from scipy.special import lambertw

import config
from cycle_core import is_admissible, selected_indices
from errors import InvalidArgumentError, NotAdmissibleError
from models import (
    BifurcationScenario,
    BinaryCycle,
    CharFactor,
    Connectivity,
    CurveBranch,
    CurveKind,
    IndexCurves,
    IndexSelection,
    NetworkParams,
)
from sweep import run_jobs

logger = logging.getLogger(__name__)

Region = Tuple[float, float, float, float]


def char_factor_value(sigma, factor: CharFactor, order: int = 0):
    """F, F' or F'' at sigma (scalar or array)."""
    e = np.exp(-np.asarray(sigma, dtype=complex))
    if order == 0:
        return sigma + factor.a - factor.b * e
    if order == 1:
        return 1.0 + factor.b * e
    if order == 2:
        return -factor.b * e
    raise InvalidArgumentError(f"derivative order must be 0, 1 or 2, got {order}")


def no_delay_root(n_index: int, p: int, c0: float, beta: float) -> complex:
    """Eigenvalue C1 beta exp(2 pi i n / p) - (1 - C0 beta) of the undelayed network."""
    phase = config.TWO_PI * n_index / p
    return (1.0 - c0) * beta * complex(math.cos(phase), math.sin(phase)) - (1.0 - c0 * beta)


def lambert_roots(factor: CharFactor, branches: Optional[Iterable[int]] = None) -> List[complex]:
    """Exact roots -a + W_k(b e^a) on the requested Lambert W branches."""
    if factor.tau == 0:
        return [no_delay_root(factor.n_index, factor.p, factor.c0, factor.beta)]
    if factor.b == 0:
        return [complex(-factor.a)]
    if branches is None:
        branches = range(-config.LAMBERT_BRANCHES, config.LAMBERT_BRANCHES + 1)
    z = factor.b * math.exp(factor.a)
    return [complex(-factor.a + lambertw(z, k)) for k in branches]


def _in_region(z: np.ndarray, region: Region) -> np.ndarray:
    re0, re1, im0, im1 = region
    return (z.real >= re0) & (z.real <= re1) & (z.imag >= im0) & (z.imag <= im1)


def _dedup(roots: Sequence[complex]) -> List[complex]:
    kept: List[complex] = []
    for r in roots:
        if all(abs(r - q) > config.ROOT_DEDUP for q in kept):
            kept.append(r)
    return kept


def char_roots(
    factor: CharFactor,
    region: Region = config.ROOT_REGION,
    max_roots: Optional[int] = None,
) -> List[complex]:
    """Roots of F in a rectangle, sorted by decreasing real part.

    Newton iteration runs from a NEWTON_GRID x NEWTON_GRID grid of seeds plus
    the Lambert W roots; converged points with |F| < NEWTON_TOL are merged at
    distance ROOT_DEDUP.
    """
    if factor.tau == 0:
        return [no_delay_root(factor.n_index, factor.p, factor.c0, factor.beta)]
    re0, re1, im0, im1 = region
    if not (np.isfinite([re0, re1, im0, im1]).all() and re0 < re1 and im0 < im1):
        raise InvalidArgumentError(f"root search region must be a bounded rectangle, got {region}")

    grid_re = np.linspace(re0, re1, config.NEWTON_GRID)
    grid_im = np.linspace(im0, im1, config.NEWTON_GRID)
    seeds = (grid_re[:, None] + 1j * grid_im[None, :]).ravel()
    lam = np.array(lambert_roots(factor))
    z = np.concatenate([lam[_in_region(lam, region)], seeds])

    a, b = factor.a, factor.b
    with np.errstate(all="ignore"):
        for _ in range(config.NEWTON_MAX_ITER):
            e = np.exp(-z)
            z = z - (z + a - b * e) / (1.0 + b * e)
        residual = np.abs(z + a - b * np.exp(-z))
    ok = np.isfinite(residual) & (residual < config.NEWTON_TOL) & _in_region(z, region)
    found = z[ok]
    found = found[np.argsort(-found.real, kind="stable")]
    roots = _dedup([complex(r) for r in found])
    if not roots:
        logger.warning(
            "no characteristic root converged for n=%d (tau=%g, C0=%g, beta=%g)",
            factor.n_index, factor.tau, factor.c0, factor.beta,
        )
    return roots[:max_roots] if max_roots else roots


# ---------------------------------------------------------------------------
# Zero-real-part boundaries
# ---------------------------------------------------------------------------


def c0_of_omega(omega, tau: float, beta: float):
    """C0 at which F has the root i omega (modulus condition)."""
    return (beta + 1.0) / (2.0 * beta) - np.square(omega) / (2.0 * tau * tau * beta * (beta - 1.0))


def _phase_mismatch(omega, n_index: int, p: int, tau: float, beta: float):
    """Im and Re of (i w + a) conj(b e^{-i w}) along the modulus curve C0(w)."""
    omega = np.asarray(omega, dtype=float)
    c0 = c0_of_omega(omega, tau, beta)
    lhs = 1j * omega + tau * (1.0 - c0 * beta)
    theta = config.TWO_PI * n_index / p
    rhs = tau * (1.0 - c0) * beta * np.exp(1j * (theta - omega))
    prod = lhs * np.conj(rhs)
    return prod.imag, prod.real


def _crossings(n_index: int, p: int, tau: float, beta: float) -> List[Tuple[float, float]]:
    """(C0, omega) pairs of purely imaginary roots with omega != 0 at one beta."""
    w_max = tau * math.sqrt(beta * beta - 1.0)
    real_factor = (2 * n_index) % p == 0
    if real_factor:
        # real coefficients: conjugate pairs, and the zero root is the pitchfork
        grid = np.linspace(0.0, w_max, config.OMEGA_SCAN_POINTS + 1)[1:]
    else:
        grid = np.linspace(-w_max, w_max, 2 * config.OMEGA_SCAN_POINTS + 1)
    s, _ = _phase_mismatch(grid, n_index, p, tau, beta)
    g = lambda w: float(_phase_mismatch(w, n_index, p, tau, beta)[0])
    roots: List[float] = []
    for i in range(len(grid) - 1):
        if s[i] == 0.0:
            roots.append(float(grid[i]))
        elif s[i] * s[i + 1] < 0.0:
            roots.append(brentq(g, grid[i], grid[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    if s[-1] == 0.0:
        roots.append(float(grid[-1]))
    out = []
    for w in roots:
        _, re = _phase_mismatch(w, n_index, p, tau, beta)
        c0 = float(c0_of_omega(w, tau, beta))
        if re > 0.0 and 0.0 <= c0 <= 1.0:
            out.append((c0, w))
    return out


def _track_branches(
    columns: Sequence[Tuple[float, List[Tuple[float, float]]]],
    n_index: int,
    first_id: int = 0,
) -> List[CurveBranch]:
    """Split multi-valued columns into continuous polylines.

    A point continues a branch that was alive at the previous beta when its C0
    is within BRANCH_JUMP; otherwise it opens a new branch.
    """
    done: List[List[Tuple[float, float, float]]] = []
    alive: List[List[Tuple[float, float, float]]] = []
    for beta, pts in columns:
        pts = sorted(pts)
        nxt: List[List[Tuple[float, float, float]]] = []
        free = list(range(len(pts)))
        pairs = sorted(
            (abs(br[-1][1] - pts[k][0]), bi, k)
            for bi, br in enumerate(alive)
            for k in range(len(pts))
        )
        used = set()
        for dist, bi, k in pairs:
            if dist >= config.BRANCH_JUMP or bi in used or k not in free:
                continue
            used.add(bi)
            free.remove(k)
            alive[bi].append((beta, pts[k][0], pts[k][1]))
            nxt.append(alive[bi])
        done.extend(br for bi, br in enumerate(alive) if bi not in used)
        nxt.extend([(beta, pts[k][0], pts[k][1])] for k in free)
        alive = nxt
    done.extend(alive)
    done.sort(key=lambda br: (br[0][0], br[0][1]))
    branches = []
    for i, br in enumerate(done):
        arr = np.array(br, dtype=float)
        branches.append(
            CurveBranch(
                n_index=n_index,
                branch_id=first_id + i,
                kind=CurveKind.HOPF,
                points=arr[:, :2],
                omegas=arr[:, 2],
            )
        )
    return branches


def pitchfork_branch(n_index: int, beta_grid: Sequence[float], branch_id: int = 0) -> CurveBranch:
    beta = np.asarray(beta_grid, dtype=float)
    return CurveBranch(
        n_index=n_index,
        branch_id=branch_id,
        kind=CurveKind.PITCHFORK,
        points=np.column_stack([beta, (1.0 + beta) / (2.0 * beta)]),
        omegas=np.zeros(len(beta)),
    )


def boundary_curve_delay(n_index: int, p: int, tau: float, beta_grid: Sequence[float]) -> List[CurveBranch]:
    """All zero-real-part curves of index n in the (beta, C0) plane.

    Points are located by bisection in omega along C0(omega); betas with no
    crossing contribute nothing. For n = p/2 the first branch is the pitchfork
    line C0 = (1 + beta) / (2 beta).
    """
    if tau <= 0:
        raise InvalidArgumentError("boundary_curve_delay needs tau > 0; use boundary_curve_no_delay")
    beta_grid = np.asarray(beta_grid, dtype=float)
    if np.any(beta_grid <= 1.0):
        raise InvalidArgumentError("beta grid values must exceed 1")
    columns = [(float(b), _crossings(n_index, p, tau, float(b))) for b in beta_grid]
    branches: List[CurveBranch] = []
    if 2 * n_index == p:
        branches.append(pitchfork_branch(n_index, beta_grid))
    branches.extend(_track_branches(columns, n_index, first_id=len(branches)))
    if not any(len(br) for br in branches):
        logger.warning("no boundary points for n=%d, p=%d, tau=%g on the given beta grid", n_index, p, tau)
    return branches


def boundary_residual(beta: float, c0: float, n_index: int, p: int, tau: float) -> float:
    """|C0 - (beta+1)/(2 beta) + w^2 / (2 tau^2 (beta-1) beta)| with w = 2 pi n / p -+ arccos(c) + 2 pi m.

    c = (1 - C0 beta) / ((1 - C0) beta); the arccos sign and winding m that
    minimise the residual are used, so every boundary branch gives zero.
    """
    c = (1.0 - c0 * beta) / ((1.0 - c0) * beta)
    acos = math.acos(min(1.0, max(-1.0, c)))
    theta = config.TWO_PI * n_index / p
    scale = 2.0 * tau * tau * (beta - 1.0) * beta
    base = c0 - (beta + 1.0) / (2.0 * beta)
    best = math.inf
    for sign in (1.0, -1.0):
        for m in range(-config.ARCCOS_WINDINGS, config.ARCCOS_WINDINGS + 1):
            w = theta - sign * acos + config.TWO_PI * m
            best = min(best, abs(base + w * w / scale))
    return best


def hopf_frequency(n_index: int, p: int, tau: float, beta: float, c0: float) -> float:
    """omega of the root i omega at a boundary point; the sign is fixed by the phase condition."""
    w = tau * math.sqrt(max(0.0, (beta - 1.0) * (beta + 1.0 - 2.0 * c0 * beta)))
    if (2 * n_index) % p == 0:
        # real factor: roots come in conjugate pairs, report omega >= 0
        return w
    factor = CharFactor(n_index, p, tau, c0, beta)
    return min((w, -w), key=lambda x: abs(char_factor_value(1j * x, factor)))


def boundary_curve_no_delay(n_index: int, p: int, beta_grid: Sequence[float]) -> CurveBranch:
    """C0 = (1 - beta cos(2 pi n / p)) / ((1 - cos(2 pi n / p)) beta), kept where 0 <= C0 <= 1."""
    if n_index % p == 0:
        raise InvalidArgumentError("the no-delay boundary is undefined for index 0 (always unstable)")
    beta = np.asarray(beta_grid, dtype=float)
    if np.any(beta <= 1.0):
        raise InvalidArgumentError("beta grid values must exceed 1")
    cos = math.cos(config.TWO_PI * n_index / p)
    c0 = (1.0 - beta * cos) / ((1.0 - cos) * beta)
    keep = (c0 >= 0.0) & (c0 <= 1.0)
    kind = CurveKind.PITCHFORK if 2 * n_index == p else CurveKind.HOPF
    omegas = np.abs(((1.0 - c0) * beta * math.sin(config.TWO_PI * n_index / p)))[keep]
    return CurveBranch(n_index=n_index, branch_id=0, kind=kind,
                       points=np.column_stack([beta[keep], c0[keep]]), omegas=omegas)


def bt_point(tau: float) -> Optional[Tuple[float, float]]:
    """Double zero on the pitchfork line: F(0) = F'(0) = 0 for index p/2."""
    if tau <= 0:
        return None

    def on_pitchfork(beta: float) -> CharFactor:
        return CharFactor(1, 2, tau, (1.0 + beta) / (2.0 * beta), beta)

    g = lambda beta: float(np.real(char_factor_value(0.0, on_pitchfork(beta), order=1)))
    lo, hi = config.BT_BETA_BRACKET
    if g(lo) * g(hi) > 0:
        return None
    beta = brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    factor = on_pitchfork(beta)
    f0 = abs(char_factor_value(0.0, factor))
    f1 = abs(char_factor_value(0.0, factor, order=1))
    if f0 >= 1e-9 or f1 >= 1e-9:
        logger.warning("double-zero residuals too large at tau=%g: %g, %g", tau, f0, f1)
        return None
    return beta, factor.c0


def bt_locus(p: int, tau_grid: Sequence[float]) -> List[Tuple[float, float]]:
    """Bogdanov-Takens points (beta, C0) of index p/2 for each tau."""
    if p % 2:
        raise InvalidArgumentError(f"Bogdanov-Takens points need an even period, got p={p}")
    out = []
    for tau in tau_grid:
        pt = bt_point(float(tau))
        if pt is not None:
            out.append(pt)
    return out


# ---------------------------------------------------------------------------
# Scenario and scans
# ---------------------------------------------------------------------------

DEFAULT_BETA_GRID = np.linspace(1.01, 5.0, 200)


def scenario(
    cycle: BinaryCycle,
    tau: float,
    beta_grid: Optional[Sequence[float]] = None,
) -> BifurcationScenario:
    """Bifurcation curves of the trivial solution for exactly the selected indices."""
    status = is_admissible(cycle)
    if not status:
        raise NotAdmissibleError("scenario needs an admissible cycle")
    beta_grid = DEFAULT_BETA_GRID if beta_grid is None else np.asarray(beta_grid, dtype=float)
    p = cycle.period
    selection = selected_indices(cycle)
    curves: Dict[int, IndexCurves] = {}
    solved: Dict[int, List[CurveBranch]] = {}
    for k in selection.indices:
        entry = IndexCurves(n_index=k)
        curves[k] = entry
        if k == 0 and tau == 0:
            # no delay: index 0 has the real root beta - 1 > 0 and no crossings
            continue
        twin = min(k, p - k)
        if twin not in solved:
            if tau == 0:
                solved[twin] = [boundary_curve_no_delay(twin, p, beta_grid)]
            else:
                solved[twin] = boundary_curve_delay(twin, p, tau, beta_grid)
        for br in solved[twin]:
            # index p - k carries the conjugate roots of index k
            omegas = br.omegas if k == twin or br.omegas is None else -br.omegas
            copy = CurveBranch(k, br.branch_id, br.kind, br.points, omegas)
            if copy.kind is CurveKind.PITCHFORK:
                entry.pitchfork_curve = copy
            else:
                entry.hopf_curves.append(copy)
        if 2 * k == p:
            entry.bt_points = bt_locus(p, [tau]) if tau > 0 else []
    result = BifurcationScenario(
        p=p, tau=tau, selection=selection, curves=curves, always_unstable=0 in selection,
    )
    logger.info(
        "scenario p=%d tau=%g: indices %s, pitchfork=%s, %d BT point(s)",
        p, tau, list(selection.indices), result.has_pitchfork, len(result.bt_points),
    )
    return result


def _leading_real_part(selection: IndexSelection, p: int, tau: float, c0: float, beta: float) -> float:
    best = -math.inf
    for k in selection.indices:
        roots = char_roots(CharFactor(k, p, tau, c0, beta))
        if roots:
            best = max(best, roots[0].real)
    if selection.kernel_multiplicity:
        # directions outside the column space decay with rate 1
        best = max(best, -tau if tau > 0 else -1.0)
    return best


def max_real_part(conn: Connectivity, params: NetworkParams, tau: Optional[float] = None) -> float:
    """Largest real part over the leading roots of all selected factors."""
    tau = params.tau if tau is None else tau
    cycle = conn.source_cycle
    return _leading_real_part(selected_indices(cycle), cycle.period, tau, params.c0, params.beta)


def scan_stability(
    cycle: BinaryCycle,
    tau: float,
    beta_grid: Sequence[float],
    c0_grid: Sequence[float],
    workers: Optional[int] = None,
) -> np.ndarray:
    """max real part on a (C0, beta) grid; rows follow c0_grid, columns beta_grid."""
    selection = selected_indices(cycle)
    p = cycle.period

    def column(beta: float) -> np.ndarray:
        return np.array([_leading_real_part(selection, p, tau, float(c0), beta) for c0 in c0_grid])

    cols = run_jobs([lambda b=float(b): column(b) for b in beta_grid], workers=workers)
    return np.column_stack(cols)


def curves_to_csv(scen: BifurcationScenario, path: Union[str, Path]) -> None:
    """Rows beta,c0,n_index,branch_id,kind for every branch and BT point."""
    lines = ["beta,c0,n_index,branch_id,kind"]
    for br in scen.all_branches():
        for beta, c0 in br.points:
            lines.append(f"{beta:.10g},{c0:.10g},{br.n_index},{br.branch_id},{br.kind.value}")
    for k in sorted(scen.curves):
        for i, (beta, c0) in enumerate(scen.curves[k].bt_points):
            lines.append(f"{beta:.10g},{c0:.10g},{k},{i},{CurveKind.BT.value}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
