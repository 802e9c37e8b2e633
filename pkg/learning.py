"""
Pseudoinverse learning rule: the projection part J0 and the transition part J
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg

import config
from cycle_core import is_admissible, permutation_matrix
from errors import CycleFormatError, NotAdmissibleError
from models import BinaryCycle, Connectivity, NetworkParams

logger = logging.getLogger(__name__)


def pseudoinverse(m: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse through the SVD.

    Singular values at or below RANK_RTOL times the largest are treated as
    zero, the same cutoff numerical_rank uses.
    """
    m = np.asarray(m, dtype=float)
    u, s, vh = linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(m.T.shape)
    keep = s > config.RANK_RTOL * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (vh.T * s_inv) @ u.T


def penrose_residuals(m: np.ndarray, m_plus: np.ndarray) -> Tuple[float, float, float, float]:
    """Max-norm residuals of the four Penrose identities."""
    m = np.asarray(m, dtype=float)
    r1 = np.abs(m @ m_plus @ m - m).max()
    r2 = np.abs(m_plus @ m @ m_plus - m_plus).max()
    r3 = np.abs((m @ m_plus).T - m @ m_plus).max()
    r4 = np.abs((m_plus @ m).T - m_plus @ m).max()
    return float(r1), float(r2), float(r3), float(r4)


def build_connectivity(cycle: BinaryCycle) -> Connectivity:
    """J0 = Sigma Sigma^+ (projection rule), J = Sigma P Sigma^+ (associating rule)."""
    status = is_admissible(cycle)
    if not status:
        raise NotAdmissibleError(
            "J Sigma = Sigma P has no exact solution for this cycle "
            f"(rank {status.rank}, {status.nonzero_dft_columns} nonzero DFT columns)"
        )
    sigma = cycle.sigma
    sigma_plus = pseudoinverse(sigma)
    P = permutation_matrix(cycle.period)
    j0 = sigma @ sigma_plus
    j = sigma @ P @ sigma_plus
    logger.debug("built connectivity for N=%d, p=%d, rank %d", cycle.n_neurons, cycle.period, status.rank)
    return Connectivity(j0=j0, j=j, source_cycle=cycle)


def storage_residual(j: np.ndarray, cycle: BinaryCycle) -> float:
    P = permutation_matrix(cycle.period)
    return float(np.abs(j @ cycle.sigma - cycle.sigma @ P).max())


def verify_storage(conn: Connectivity, cycle: Optional[BinaryCycle] = None) -> bool:
    """True iff |J Sigma - Sigma P|_max < STORAGE_ATOL.

    cycle defaults to the one the connectivity was built from; any other
    cycle checks whether the same J also stores it.
    """
    target = conn.source_cycle if cycle is None else cycle
    if target.n_neurons != conn.n:
        return False
    return storage_residual(conn.j, target) < config.STORAGE_ATOL


def network_params(
    c0: float,
    lam: float,
    tau: float = 0.0,
    beta: Optional[float] = None,
    beta1: Optional[float] = None,
) -> NetworkParams:
    """Validated parameters from either beta or beta1."""
    return NetworkParams.build(c0=c0, lam=lam, tau=tau, beta=beta, beta1=beta1)


def connectivity_to_json(conn: Connectivity, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(conn.to_dict(), indent=2), encoding="utf-8")


def connectivity_from_json(path: Union[str, Path]) -> Connectivity:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        cycle = BinaryCycle(np.array(data["cycle"], dtype=int))
        j0 = np.array(data["j0"], dtype=float)
        j = np.array(data["j"], dtype=float)
    except (OSError, ValueError, KeyError) as exc:
        raise CycleFormatError(f"cannot load connectivity from {path}: {exc}")
    if j0.shape != (cycle.n_neurons,) * 2 or j.shape != j0.shape:
        raise CycleFormatError(f"connectivity shapes {j0.shape}, {j.shape} do not match the cycle")
    return Connectivity(j0=j0, j=j, source_cycle=cycle)
