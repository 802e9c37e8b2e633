"""
Discrete dynamics xi -> sgn(J xi) on all 2^N binary states and its loops
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

import config
from errors import EnumerationLimitError, InvalidArgumentError
from models import DEGENERATE, BinaryCycle, Connectivity, TransitionGraph
from sweep import run_jobs

logger = logging.getLogger(__name__)

CHUNK_BITS = 16


def encode(pattern: Sequence[int]) -> int:
    """+1 -> 1, -1 -> 0, first component most significant."""
    code = 0
    for x in pattern:
        if x not in (1, -1):
            raise InvalidArgumentError(f"pattern entries must be +-1, got {x}")
        code = (code << 1) | (1 if x == 1 else 0)
    return code


def decode(code: int, n: int) -> np.ndarray:
    if not 0 <= code < (1 << n):
        raise InvalidArgumentError(f"code {code} out of range for N={n}")
    bits = (code >> np.arange(n - 1, -1, -1)) & 1
    return 2 * bits.astype(int) - 1


def _decode_block(codes: np.ndarray, n: int) -> np.ndarray:
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (codes[:, None] >> shifts[None, :]) & 1
    return (2 * bits - 1).astype(float)


def step(j: np.ndarray, pattern: Sequence[int]) -> Optional[np.ndarray]:
    """sgn(J xi), or None when some component of J xi is sign-degenerate."""
    field = np.asarray(j, dtype=float) @ np.asarray(pattern, dtype=float)
    if np.any(np.abs(field) < config.SIGN_EPS):
        return None
    return np.where(field > 0, 1, -1)


def _successor_block(j: np.ndarray, start: int, stop: int) -> np.ndarray:
    n = j.shape[0]
    codes = np.arange(start, stop, dtype=np.int64)
    states = _decode_block(codes, n)
    fields = states @ j.T
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    succ = (fields > 0).astype(np.int64) @ weights
    succ[np.any(np.abs(fields) < config.SIGN_EPS, axis=1)] = DEGENERATE
    return succ


def _canonical(loop: List[int]) -> Tuple[int, ...]:
    k = loop.index(min(loop))
    return tuple(loop[k:] + loop[:k])


def _decompose(succ: np.ndarray) -> Tuple[List[Tuple[int, ...]], np.ndarray]:
    """Loops and tail lengths of a functional graph with DEGENERATE sinks."""
    m = len(succ)
    done = np.zeros(m, dtype=bool)
    tails = np.full(m, -1, dtype=np.int64)
    loops: List[Tuple[int, ...]] = []
    for s in range(m):
        if done[s]:
            continue
        path: List[int] = []
        where: Dict[int, int] = {}
        x = s
        while x != DEGENERATE and not done[x] and x not in where:
            where[x] = len(path)
            path.append(x)
            x = int(succ[x])
        if x == DEGENERATE:
            tails[path] = -1
        elif x in where:
            start = where[x]
            loops.append(_canonical(path[start:]))
            tails[path[start:]] = 0
            for i in range(start):
                tails[path[i]] = start - i
        else:
            base = tails[x]
            for i, y in enumerate(path):
                tails[y] = -1 if base < 0 else base + len(path) - i
        done[path] = True
    return loops, tails


def build_graph(conn: Union[Connectivity, np.ndarray], workers: Optional[int] = None) -> TransitionGraph:
    """Enumerate all 2^N states; successors are computed in chunks, loops afterwards."""
    j = conn.j if isinstance(conn, Connectivity) else np.asarray(conn, dtype=float)
    n = j.shape[0]
    if n > config.MAX_GRAPH_NEURONS:
        raise EnumerationLimitError(
            f"transition graph enumeration is limited to N <= {config.MAX_GRAPH_NEURONS}, got N={n}"
        )
    total = 1 << n
    chunk = 1 << CHUNK_BITS
    bounds = [(a, min(a + chunk, total)) for a in range(0, total, chunk)]
    if len(bounds) == 1:
        succ = _successor_block(j, 0, total)
    else:
        blocks = run_jobs([lambda a=a, b=b: _successor_block(j, a, b) for a, b in bounds], workers=workers)
        succ = np.concatenate(blocks)
    loops, tails = _decompose(succ)
    logger.info("transition graph N=%d: %d loops, lengths %s", n, len(loops), sorted(len(l) for l in loops))
    return TransitionGraph(n=n, successor=succ, loops=loops, tails=tails)


def loops_as_cycles(graph: TransitionGraph) -> List[BinaryCycle]:
    """One cycle per loop with columns in loop order.

    A fixed point xi is returned as the two-column cycle (xi, xi), which
    satisfies J Sigma = Sigma P whenever J xi = xi in sign.
    """
    cycles = []
    for loop in graph.loops:
        cols = [decode(c, graph.n) for c in loop]
        if len(cols) == 1:
            cols = cols * 2
        cycles.append(BinaryCycle(np.array(cols).T))
    return cycles


def tails_histogram(graph: TransitionGraph) -> Dict[str, int]:
    counts = Counter(int(t) for t in graph.tails)
    out = {str(k): counts[k] for k in sorted(k for k in counts if k >= 0)}
    if -1 in counts:
        out["degenerate"] = counts[-1]
    return out


def graph_to_json(graph: TransitionGraph, path: Union[str, Path]) -> None:
    data = {
        "n": graph.n,
        "loops": [list(loop) for loop in graph.loops],
        "tails_histogram": tails_histogram(graph),
    }
    Path(path).write_text(json.dumps(data, indent=2), encoding="utf-8")


def graph_to_dot(graph: TransitionGraph, path: Union[str, Path]) -> None:
    on_loop = {c for loop in graph.loops for c in loop}
    lines = ["digraph transitions {"]
    for s, t in enumerate(graph.successor):
        style = ' [style=bold]' if s in on_loop else ""
        target = "degenerate" if t == DEGENERATE else str(int(t))
        lines.append(f"  {s} -> {target}{style};")
    lines.append("}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
