"""
Binary cyclic patterns: admissibility, structural class, selected indices, file format
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

import config
from errors import CycleFormatError, InvalidArgumentError, NotAdmissibleError
from models import Admissibility, BinaryCycle, CycleClass, CycleKind, IndexSelection

logger = logging.getLogger(__name__)

_TOKENS = {"+1": 1, "1": 1, "+": 1, "-1": -1, "-": -1, "−1": -1, "−": -1}


def permutation_matrix(p: int) -> np.ndarray:
    """Cyclic shift P with ones on the subdiagonal and in the top-right corner.

    Right-multiplying a cycle by P moves every pattern one step left:
    (xi1, ..., xip) P = (xi2, ..., xip, xi1).
    """
    if int(p) != p or p < 2:
        raise InvalidArgumentError(f"permutation_matrix needs p >= 2, got {p}")
    p = int(p)
    P = np.zeros((p, p), dtype=int)
    P[np.arange(1, p), np.arange(p - 1)] = 1
    P[0, p - 1] = 1
    return P


def dft_matrix(p: int) -> np.ndarray:
    """W[j, k] = rho^(j k) with rho = exp(2 pi i / p); column k is v^(k)."""
    jk = np.outer(np.arange(p), np.arange(p))
    return np.exp(2j * np.pi * jk / p)


def numerical_rank(m: np.ndarray) -> int:
    s = linalg.svdvals(np.asarray(m, dtype=float))
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > config.RANK_RTOL * s[0]))


def dft_floor(cycle: BinaryCycle) -> float:
    return config.DFT_ATOL_SCALE * np.sqrt(cycle.n_neurons * cycle.period)


def dft_profile(cycle: BinaryCycle) -> np.ndarray:
    """Euclidean norms of the columns of Sigma W."""
    return np.linalg.norm(cycle.sigma @ dft_matrix(cycle.period), axis=0)


def is_admissible(cycle: BinaryCycle) -> Admissibility:
    """A cycle is admissible iff Sigma W has exactly rank(Sigma) nonzero columns."""
    if cycle.adjacent_repeat:
        logger.warning("cycle has two cyclically adjacent equal columns")
    profile = dft_profile(cycle)
    nonzero = int(np.sum(profile > dft_floor(cycle)))
    rank = numerical_rank(cycle.sigma)
    return Admissibility(
        admissible=nonzero == rank,
        rank=rank,
        nonzero_dft_columns=nonzero,
        dft_profile=tuple(float(x) for x in profile),
    )


def selected_indices(cycle: BinaryCycle) -> IndexSelection:
    """Indices k with Sigma v^(k) != 0."""
    profile = dft_profile(cycle)
    picked = tuple(int(k) for k in np.flatnonzero(profile > dft_floor(cycle)))
    rank = numerical_rank(cycle.sigma)
    return IndexSelection(
        indices=picked,
        multiplicities=tuple(1 for _ in picked),
        kernel_multiplicity=cycle.n_neurons - rank,
        period=cycle.period,
    )


# ---------------------------------------------------------------------------
# Structure
# ---------------------------------------------------------------------------


def _shift_of(row: np.ndarray, ref: np.ndarray) -> Optional[int]:
    """s such that row == roll(ref, -s), or None."""
    for s in range(len(ref)):
        if np.array_equal(row, np.roll(ref, -s)):
            return s
    return None


def circulant_span(generator: np.ndarray) -> np.ndarray:
    """Orthonormal basis (columns) of the span of all cyclic shifts of a row."""
    p = len(generator)
    shifts = np.array([np.roll(generator, -s) for s in range(p)], dtype=float)
    return linalg.orth(shifts.T, rcond=config.RANK_RTOL)


def generator_loops(cycle: BinaryCycle) -> List[Tuple[Tuple[int, ...], np.ndarray]]:
    """Group rows by generator (equality up to cyclic shift).

    Returns (row indices, loop basis) per generator, in order of first row.
    """
    groups: List[List[int]] = []
    reps: List[np.ndarray] = []
    for i, row in enumerate(cycle.entries):
        for g, ref in enumerate(reps):
            if _shift_of(row, ref) is not None:
                groups[g].append(i)
                break
        else:
            reps.append(row.copy())
            groups.append([i])
    return [(tuple(rows), circulant_span(ref)) for rows, ref in zip(groups, reps)]


def is_anti_symmetric(cycle: BinaryCycle) -> bool:
    p = cycle.period
    if p % 2:
        return False
    half = p // 2
    e = cycle.entries
    return bool(np.array_equal(e[:, half:], -e[:, :half]))


def is_consecutive(cycle: BinaryCycle) -> bool:
    """Row i+1 equals row i times P (a one-step left shift)."""
    e = cycle.entries
    return all(np.array_equal(e[i + 1], np.roll(e[i], -1)) for i in range(len(e) - 1))


def classify(cycle: BinaryCycle) -> CycleClass:
    status = is_admissible(cycle)
    if not status:
        raise NotAdmissibleError(
            f"cannot classify a non-admissible cycle (rank {status.rank}, "
            f"{status.nonzero_dft_columns} nonzero DFT columns)"
        )
    loops = generator_loops(cycle)
    if len(loops) == 1:
        kind = CycleKind.SIMPLE
    else:
        # separable iff the generator loops are linearly independent subspaces
        dims = sum(basis.shape[1] for _, basis in loops)
        joint = numerical_rank(np.hstack([basis for _, basis in loops]))
        kind = CycleKind.SEPARABLE_COMPOSITE if joint == dims else CycleKind.INSEPARABLE_COMPOSITE
    return CycleClass(
        kind=kind,
        anti_symmetric=is_anti_symmetric(cycle),
        mc=status.rank == cycle.n_neurons,
        consecutive=is_consecutive(cycle),
    )


# ---------------------------------------------------------------------------
# Construction helpers
# ---------------------------------------------------------------------------


def simple_cycle(generator: Sequence[int], n_rows: Optional[int] = None) -> BinaryCycle:
    """Consecutive simple cycle with rows eta, eta P, eta P^2, ..."""
    eta = np.asarray(generator, dtype=int)
    rows = len(eta) if n_rows is None else n_rows
    return BinaryCycle(np.array([np.roll(eta, -i) for i in range(rows)]))


def rotate(cycle: BinaryCycle, k: int) -> BinaryCycle:
    """Column rotation: pattern k becomes the first one."""
    return BinaryCycle(np.roll(cycle.entries, -k, axis=1))


def negate(cycle: BinaryCycle) -> BinaryCycle:
    return BinaryCycle(-cycle.entries.astype(int))


def equal_up_to_rotation(a: BinaryCycle, b: BinaryCycle) -> bool:
    if a.entries.shape != b.entries.shape:
        return False
    return any(rotate(a, k) == b for k in range(a.period))


# ---------------------------------------------------------------------------
# Cycle file format: "N p" then N rows of p tokens
# ---------------------------------------------------------------------------


def parse_cycle_text(text: str) -> BinaryCycle:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise CycleFormatError("empty cycle file")
    header = lines[0].split()
    try:
        n, p = int(header[0]), int(header[1])
    except (IndexError, ValueError):
        raise CycleFormatError(f"header must be 'N p', got {lines[0]!r}")
    if len(header) != 2:
        raise CycleFormatError(f"header must be 'N p', got {lines[0]!r}")
    body = lines[1:]
    if len(body) != n:
        raise CycleFormatError(f"expected {n} rows, found {len(body)}")
    rows = []
    for i, ln in enumerate(body, start=1):
        tokens = ln.split()
        if len(tokens) != p:
            raise CycleFormatError(f"row {i}: expected {p} entries, found {len(tokens)}")
        try:
            rows.append([_TOKENS[t] for t in tokens])
        except KeyError as exc:
            raise CycleFormatError(f"row {i}: bad entry {exc.args[0]!r}")
    try:
        return BinaryCycle(np.array(rows, dtype=int))
    except InvalidArgumentError as exc:
        raise CycleFormatError(exc.detail)


def read_cycle(path: Union[str, Path]) -> BinaryCycle:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise CycleFormatError(f"cannot read cycle file {path}: {exc}")
    return parse_cycle_text(text)


def format_cycle(cycle: BinaryCycle) -> str:
    lines = [f"{cycle.n_neurons} {cycle.period}"]
    for row in cycle.entries:
        lines.append(" ".join("+1" if x > 0 else "-1" for x in row))
    return "\n".join(lines) + "\n"


def write_cycle(cycle: BinaryCycle, path: Union[str, Path]) -> None:
    Path(path).write_text(format_cycle(cycle), encoding="utf-8")
