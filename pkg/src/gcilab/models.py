from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np


class Source(str, Enum):
    EXACT = "exact"
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


class Verdict(str, Enum):
    CONFIRMED = "confirmed"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


METHODS = ("auto", "mc", "quadrature")


@dataclass(frozen=True)
class Interval:
    """
    A real value with a two-sided confidence interval.
    Unlike MeasureEstimate it is not restricted to [0, 1] (sides of an inequality carry constants).
    """
    value: float
    low: float
    high: float

    def __post_init__(self) -> None:
        if not (self.low <= self.value <= self.high):
            raise ValueError(f"interval must satisfy low <= value <= high, got {self}")

    @classmethod
    def point(cls, value: float) -> Interval:
        v = float(value)
        return cls(v, v, v)

    @property
    def is_point(self) -> bool:
        return self.low == self.high

    def scaled(self, c: float) -> Interval:
        if c < 0:
            raise ValueError(f"scale factor must be >= 0, got {c}")
        return Interval(c * self.value, c * self.low, c * self.high)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class MeasureEstimate:
    value: float
    ci_low: float
    ci_high: float
    source: Source
    samples: int = 0
    seed: Optional[int] = None
    undecided: int = 0

    def __post_init__(self) -> None:
        if not (0.0 <= self.ci_low <= self.value <= self.ci_high <= 1.0):
            raise ValueError(
                f"estimate must satisfy 0 <= ci_low <= value <= ci_high <= 1, got "
                f"({self.ci_low}, {self.value}, {self.ci_high})"
            )
        if self.source is Source.EXACT and not (self.ci_low == self.value == self.ci_high):
            raise ValueError("exact estimates must have a collapsed confidence interval")

    @classmethod
    def exact(cls, value: float) -> MeasureEstimate:
        v = min(1.0, max(0.0, float(value)))
        return cls(value=v, ci_low=v, ci_high=v, source=Source.EXACT)

    @property
    def interval(self) -> Interval:
        return Interval(self.value, self.ci_low, self.ci_high)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["source"] = self.source.value
        return d


@dataclass(frozen=True)
class Budget:
    """Sampling / quadrature parameters shared by every measure in one computation."""
    samples: int = 1_000_000
    seed: int = 42
    confidence: float = 0.99
    method: str = "auto"
    cells_per_axis: Optional[int] = None
    bounds: float = 8.0
    workers: int = 1
    minkowski_tol: float = 1e-7
    minkowski_max_iter: int = 10_000

    def __post_init__(self) -> None:
        if self.samples < 100:
            raise ValueError(f"samples must be >= 100, got {self.samples}")
        if not (0.0 < self.confidence < 1.0):
            raise ValueError(f"confidence must be in (0, 1), got {self.confidence}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def with_seed(self, seed: int) -> Budget:
        return replace(self, seed=int(seed))

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _matrix(a: Any) -> np.ndarray:
    arr = np.array(a, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MatrixQuintuple:
    """(M, P, R, S, T): candidate matrices for the main theorem's hypotheses."""
    m: np.ndarray
    p: np.ndarray
    r: np.ndarray
    s: np.ndarray
    t: np.ndarray
    validated: bool = False

    def __post_init__(self) -> None:
        for name in ("m", "p", "r", "s", "t"):
            object.__setattr__(self, name, _matrix(getattr(self, name)))
        shapes = {getattr(self, name).shape for name in ("m", "p", "r", "s", "t")}
        if len(shapes) != 1:
            raise ValueError(f"quintuple matrices must share one shape, got {sorted(shapes)}")

    @property
    def n(self) -> int:
        return int(self.m.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {k: getattr(self, k).tolist() for k in ("m", "p", "r", "s", "t")}
        d["n"] = self.n
        d["validated"] = self.validated
        return d


@dataclass(frozen=True, eq=False)
class AnglePair:
    """Commuting symmetric matrices (alpha, beta) parametrizing a quintuple family."""
    alpha: np.ndarray
    beta: np.ndarray
    shared_eigenbasis: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", _matrix(self.alpha))
        object.__setattr__(self, "beta", _matrix(self.beta))
        if self.alpha.shape != self.beta.shape:
            raise ValueError("alpha and beta must have the same shape")
        if self.shared_eigenbasis is not None:
            object.__setattr__(self, "shared_eigenbasis", _matrix(self.shared_eigenbasis))

    @property
    def n(self) -> int:
        return int(self.alpha.shape[0])

    def to_dict(self) -> Dict[str, Any]:
        d: Dict[str, Any] = {"alpha": self.alpha.tolist(), "beta": self.beta.tolist()}
        if self.shared_eigenbasis is not None:
            d["shared_eigenbasis"] = self.shared_eigenbasis.tolist()
        return d


@dataclass(frozen=True)
class HypothesisReport:
    eq1: float
    eq2: float
    eq3: float
    block: float
    min_eig: float
    tol: float
    validated: bool

    @property
    def max_residual(self) -> float:
        return max(self.eq1, self.eq2, self.eq3, self.block)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def decide_verdict(lhs: Interval, rhs: Interval) -> Verdict:
    if lhs.high <= rhs.low:
        return Verdict.CONFIRMED
    if lhs.low > rhs.high:
        return Verdict.VIOLATED
    return Verdict.INCONCLUSIVE


CSV_COLUMNS = (
    "name", "n", "lhs", "lhs_lo", "lhs_hi", "rhs", "rhs_lo", "rhs_hi",
    "margin", "verdict", "samples", "seed", "params",
)


@dataclass(frozen=True)
class InequalityReport:
    name: str
    n: int
    lhs: Interval
    rhs: Interval
    verdict: Verdict
    samples: int
    seed: int
    parameters: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def build(
        cls,
        name: str,
        n: int,
        lhs: Interval,
        rhs: Interval,
        *,
        samples: int,
        seed: int,
        parameters: Optional[Dict[str, Any]] = None,
    ) -> InequalityReport:
        return cls(
            name=name,
            n=int(n),
            lhs=lhs,
            rhs=rhs,
            verdict=decide_verdict(lhs, rhs),
            samples=int(samples),
            seed=int(seed),
            parameters=dict(parameters or {}),
        )

    @property
    def margin(self) -> float:
        return self.rhs.value - self.lhs.value

    def to_row(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "n": self.n,
            "lhs": self.lhs.value,
            "lhs_lo": self.lhs.low,
            "lhs_hi": self.lhs.high,
            "rhs": self.rhs.value,
            "rhs_lo": self.rhs.low,
            "rhs_hi": self.rhs.high,
            "margin": self.margin,
            "verdict": self.verdict.value,
            "samples": self.samples,
            "seed": self.seed,
            "params": json.dumps(self.parameters, sort_keys=True, separators=(",", ":")),
        }

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["verdict"] = self.verdict.value
        d["margin"] = self.margin
        return d


@dataclass(frozen=True, eq=False)
class HProfile:
    """Estimates of h(y) = gamma((A - S y) ∩ (B + T y)) on a list of points y."""
    a: Any
    b: Any
    s: np.ndarray
    t: np.ndarray
    ys: List[np.ndarray]
    values: List[MeasureEstimate]


@dataclass(frozen=True)
class SupportCheck:
    y: List[float]
    h_value: float
    minkowski: str

    @property
    def ok(self) -> bool:
        return not (self.h_value > 0 and self.minkowski == "non_member")


@dataclass(frozen=True)
class HPropertyReport:
    max_at_zero: List[InequalityReport]
    log_concavity: List[InequalityReport]
    support: List[SupportCheck]

    @property
    def reports(self) -> List[InequalityReport]:
        return list(self.max_at_zero) + list(self.log_concavity)

    @property
    def violations(self) -> int:
        bad = sum(1 for r in self.reports if r.verdict is Verdict.VIOLATED)
        return bad + sum(1 for c in self.support if not c.ok)


@dataclass(frozen=True)
class TailComparison:
    k: float
    n: int
    exact: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.exact <= self.bound


SUITES = (
    "gcc2d", "ellipsoid", "main_theorem", "corollary1", "small_radius",
    "lemma_shao", "h_profile", "chernoff", "all",
)


@dataclass
class SuiteConfig:
    suite: str = "all"
    n: int = 4
    trials: int = 50
    samples: int = 1_000_000
    seed: int = 42
    confidence: float = 0.99
    output: str = "gci_report.csv"
    workers: int = 1
    method: str = "auto"

    def budget(self, seed: Optional[int] = None) -> Budget:
        return Budget(
            samples=self.samples,
            seed=self.seed if seed is None else int(seed),
            confidence=self.confidence,
            method=self.method,
            workers=self.workers,
        )

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class SuiteResult:
    status: str  # "ok" | "error"
    suite: str
    output_csv: str
    counts: Dict[str, int]
    rows: int
    errors: List[str]

    @property
    def inconclusive_fraction(self) -> float:
        return self.counts.get("inconclusive", 0) / self.rows if self.rows else 0.0

    @property
    def exit_code(self) -> int:
        return 1 if (self.status != "ok" or self.counts.get("violated", 0) > 0) else 0

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["inconclusive_fraction"] = self.inconclusive_fraction
        return d
