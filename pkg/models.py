"""
Domain records for cyclic-pattern networks
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.optimize import brentq

import config
from errors import ConfigError, InvalidArgumentError


# ---------------------------------------------------------------------------
# Cycles
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BinaryCycle:
    """An N x p matrix of +-1 whose columns are the patterns of one cycle."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries)
        if arr.ndim != 2:
            raise InvalidArgumentError(f"cycle must be a 2-D matrix, got shape {arr.shape}")
        n, p = arr.shape
        if n < 1 or p < 2:
            raise InvalidArgumentError(f"cycle needs N >= 1 and p >= 2, got N={n}, p={p}")
        if not np.all(np.isin(arr, (-1, 1))):
            raise InvalidArgumentError("cycle entries must be exactly -1 or +1")
        arr = arr.astype(np.int8)
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def n_neurons(self) -> int:
        return self.entries.shape[0]

    @property
    def period(self) -> int:
        return self.entries.shape[1]

    @property
    def sigma(self) -> np.ndarray:
        """Float copy of the matrix for linear algebra."""
        return self.entries.astype(float)

    def column(self, mu: int) -> np.ndarray:
        return self.entries[:, mu % self.period].astype(int)

    @property
    def adjacent_repeat(self) -> bool:
        """True if two cyclically adjacent columns are equal."""
        rolled = np.roll(self.entries, -1, axis=1)
        return bool(np.any(np.all(self.entries == rolled, axis=0)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinaryCycle):
            return NotImplemented
        return np.array_equal(self.entries, other.entries)

    def __hash__(self) -> int:
        return hash((self.entries.shape, self.entries.tobytes()))

    def to_list(self) -> List[List[int]]:
        return self.entries.astype(int).tolist()


class CycleKind(Enum):
    SIMPLE = "simple"
    SEPARABLE_COMPOSITE = "separable_composite"
    INSEPARABLE_COMPOSITE = "inseparable_composite"


@dataclass(frozen=True)
class CycleClass:
    kind: CycleKind
    anti_symmetric: bool
    mc: bool
    consecutive: bool

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind.value,
            "anti_symmetric": self.anti_symmetric,
            "mc": self.mc,
            "consecutive": self.consecutive,
        }


@dataclass(frozen=True)
class Admissibility:
    admissible: bool
    rank: int
    nonzero_dft_columns: int
    dft_profile: Tuple[float, ...]

    def __bool__(self) -> bool:
        return self.admissible


@dataclass(frozen=True)
class IndexSelection:
    """Characteristic-equation indices selected by a cycle.

    Each selected index carries multiplicity one; the directions of R^N
    outside the column space of the cycle are counted in kernel_multiplicity.
    """

    indices: Tuple[int, ...]
    multiplicities: Tuple[int, ...]
    kernel_multiplicity: int
    period: int

    @property
    def count(self) -> int:
        return sum(self.multiplicities)

    def __contains__(self, k: int) -> bool:
        return k in self.indices


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Connectivity:
    j0: np.ndarray
    j: np.ndarray
    source_cycle: BinaryCycle

    @property
    def n(self) -> int:
        return self.j.shape[0]

    def to_dict(self) -> Dict:
        return {
            "n": self.n,
            "p": self.source_cycle.period,
            "j0": self.j0.tolist(),
            "j": self.j.tolist(),
            "cycle": self.source_cycle.to_list(),
        }


def beta_from_beta1(beta1: float) -> float:
    return math.atanh(beta1) / beta1


def beta1_from_beta(beta: float) -> float:
    """Invert beta = arctanh(beta1) / beta1 on (0, 1) by bisection."""
    lo, hi = config.BETA1_BOUNDS
    g = lambda b1: math.atanh(b1) / b1 - beta
    if beta <= 1.0 or g(lo) >= 0.0:
        raise InvalidArgumentError(f"beta must exceed 1, got {beta}")
    if g(hi) <= 0.0:
        raise InvalidArgumentError(f"beta={beta} is beyond the invertible range (beta1 -> 1)")
    return brentq(g, lo, hi, xtol=config.BETA1_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)


class NetworkParams(BaseModel):
    """Physical parameters (C0, beta1, lambda, tau) plus derived gains."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    c0: float = Field(..., ge=0.0, le=1.0)
    beta1: float = Field(..., gt=0.0, lt=1.0)
    lam: float = Field(..., gt=0.0, alias="lambda")
    tau: float = Field(0.0, ge=0.0)

    @property
    def c1(self) -> float:
        return 1.0 - self.c0

    @property
    def beta(self) -> float:
        return beta_from_beta1(self.beta1)

    @property
    def beta_k(self) -> float:
        return self.beta / self.lam

    @property
    def memory_amplitude(self) -> float:
        """beta_K * beta1, the magnitude of a stored memory state."""
        return self.beta_k * self.beta1

    @classmethod
    def build(
        cls,
        c0: float,
        lam: float,
        tau: float = 0.0,
        beta: Optional[float] = None,
        beta1: Optional[float] = None,
    ) -> "NetworkParams":
        if (beta is None) == (beta1 is None):
            raise ConfigError("exactly one of beta and beta1 must be given")
        if beta1 is None:
            beta1 = beta1_from_beta(beta)
        try:
            return cls(c0=c0, beta1=beta1, lam=lam, tau=tau)
        except ValidationError as exc:
            raise ConfigError(f"invalid network parameters: {exc}") from exc

    def to_dict(self) -> Dict:
        return {
            "c0": self.c0,
            "beta1": self.beta1,
            "beta": self.beta,
            "lambda": self.lam,
            "tau": self.tau,
        }


# ---------------------------------------------------------------------------
# Transition graph
# ---------------------------------------------------------------------------

DEGENERATE = -1


@dataclass(frozen=True, eq=False)
class TransitionGraph:
    """successor[s] is the code of sgn(J s), or DEGENERATE.

    tails[s] is the number of steps from s to a loop state, or -1 when the
    chain ends in a degenerate state.
    """

    n: int
    successor: np.ndarray
    loops: List[Tuple[int, ...]]
    tails: np.ndarray

    @property
    def loop_lengths(self) -> List[int]:
        return sorted(len(loop) for loop in self.loops)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    tau: float
    dt: float
    lam: float

    @property
    def n(self) -> int:
        return self.u.shape[1]

    @property
    def t_end(self) -> float:
        return float(self.times[-1])


@dataclass
class RetrievalReport:
    sign_sequence: List[Optional[Tuple[int, ...]]]
    matched_count: int
    full_traversals: int
    first_failure_interval: Optional[int]
    start_index: int = 0
    aligned: bool = True

    def to_dict(self) -> Dict:
        return {
            "sign_sequence": [list(s) if s is not None else None for s in self.sign_sequence],
            "matched_count": self.matched_count,
            "full_traversals": self.full_traversals,
            "first_failure_interval": self.first_failure_interval,
            "start_index": self.start_index,
            "aligned": self.aligned,
        }


# ---------------------------------------------------------------------------
# Stability of the trivial solution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CharFactor:
    """F(s) = s + tau(1 - C0 beta) - tau C1 beta exp(-s + 2 pi i n / p)."""

    n_index: int
    p: int
    tau: float
    c0: float
    beta: float

    @property
    def a(self) -> float:
        return self.tau * (1.0 - self.c0 * self.beta)

    @property
    def b(self) -> complex:
        phase = config.TWO_PI * self.n_index / self.p
        return self.tau * (1.0 - self.c0) * self.beta * complex(math.cos(phase), math.sin(phase))


class CurveKind(Enum):
    HOPF = "hopf"
    PITCHFORK = "pitchfork"
    BT = "bt"


@dataclass
class CurveBranch:
    n_index: int
    branch_id: int
    kind: CurveKind
    points: np.ndarray  # (K, 2) rows of (beta, c0)
    omegas: Optional[np.ndarray] = None  # imaginary part of the crossing root per point

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class IndexCurves:
    n_index: int
    hopf_curves: List[CurveBranch] = field(default_factory=list)
    pitchfork_curve: Optional[CurveBranch] = None
    bt_points: List[Tuple[float, float]] = field(default_factory=list)


@dataclass
class BifurcationScenario:
    p: int
    tau: float
    selection: IndexSelection
    curves: Dict[int, IndexCurves]
    always_unstable: bool

    @property
    def has_pitchfork(self) -> bool:
        return any(c.pitchfork_curve is not None for c in self.curves.values())

    @property
    def bt_points(self) -> List[Tuple[float, float]]:
        return [pt for c in self.curves.values() for pt in c.bt_points]

    def all_branches(self) -> List[CurveBranch]:
        out: List[CurveBranch] = []
        for k in sorted(self.curves):
            c = self.curves[k]
            out.extend(c.hopf_curves)
            if c.pitchfork_curve is not None:
                out.append(c.pitchfork_curve)
        return out

    def to_dict(self) -> Dict:
        return {
            "p": self.p,
            "tau": self.tau,
            "indices": list(self.selection.indices),
            "kernel_multiplicity": self.selection.kernel_multiplicity,
            "always_unstable": self.always_unstable,
            "pitchfork": self.has_pitchfork,
            "bt_points": [list(pt) for pt in self.bt_points],
            "hopf_branches": {
                str(k): len(c.hopf_curves) for k, c in sorted(self.curves.items())
            },
        }


# ---------------------------------------------------------------------------
# Derived per-interval system
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DerivedSystem:
    j0: np.ndarray
    params: NetworkParams
    forcing_pattern: np.ndarray

    @property
    def n(self) -> int:
        return self.j0.shape[0]


class CountClass(Enum):
    ONE = "one"
    ONE_OR_THREE = "one_or_three"
    THREE_TO_THE_N = "three_to_the_n"


@dataclass(frozen=True)
class NeuronBounds:
    f_check_q: float
    f_hat_p: float
    k_minus: float
    k_plus: float


@dataclass
class Equilibrium:
    u: np.ndarray
    stable: bool


@dataclass
class EquilibriumReport:
    count_class: CountClass
    stable_two_to_the_n: bool
    turning_points: List[Optional[Tuple[float, float]]]
    h1: List[bool]
    h2: List[bool]
    h3: List[bool]
    eta_rule: str = "outer_envelope_roots"
    equilibria: Optional[List[Equilibrium]] = None

    def to_dict(self) -> Dict:
        out = {
            "count_class": self.count_class.value,
            "stable_two_to_the_n": self.stable_two_to_the_n,
            "turning_points": [list(tp) if tp else None for tp in self.turning_points],
            "conditions": {"H1": self.h1, "H2": self.h2, "H3": self.h3},
            "eta_rule": self.eta_rule,
        }
        if self.equilibria is not None:
            out["equilibria"] = [
                {"u": e.u.tolist(), "stable": e.stable} for e in self.equilibria
            ]
        return out


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


class RunConfig(BaseModel):
    """Configuration of a simulate run, read from YAML."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    cycle_file: str
    c0: float = Field(..., ge=0.0, le=1.0)
    beta: Optional[float] = Field(None, gt=1.0)
    beta1: Optional[float] = Field(None, gt=0.0, lt=1.0)
    lam: float = Field(..., gt=0.0, alias="lambda")
    tau_ms: float = Field(..., ge=0.0)
    t_end_ms: float = Field(..., gt=0.0)
    dt_ms: Optional[float] = Field(None, gt=0.0)
    a: Optional[float] = Field(None, gt=0.0)
    seed: int = 0
    start_index: int = Field(0, ge=0)
    settle_fraction: float = Field(config.DEFAULT_SETTLE_FRACTION, ge=0.0, lt=1.0)
    n_trajectories: int = Field(1, ge=1)
    initial_scale: Optional[float] = Field(None, gt=0.0)
    output_dir: str = "."

    @model_validator(mode="after")
    def _one_gain(self):
        if (self.beta is None) == (self.beta1 is None):
            raise ValueError("exactly one of beta and beta1 must be given")
        return self

    def network_params(self) -> NetworkParams:
        return NetworkParams.build(
            c0=self.c0, lam=self.lam, tau=self.tau_ms, beta=self.beta, beta1=self.beta1
        )

    def resolved_dt(self) -> float:
        if self.dt_ms is not None:
            return self.dt_ms
        if self.tau_ms > 0:
            return self.tau_ms / config.DEFAULT_STEPS_PER_DELAY
        return config.DEFAULT_ODE_DT
