from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .convex_sets import (
    MEMBER,
    NON_MEMBER,
    Body,
    Product,
    conjunction,
    intersect,
    linear_image,
    minkowski_sum,
    row_matmul,
)
from .chernoff import constant_c0
from .errors import (
    ContainmentError,
    DimensionMismatchError,
    DomainError,
    InvalidQuintupleError,
    SingularMatrixError,
)
from .gaussian import derive_seed, measure, propagate_product
from .matrix_lab import (
    SQRT_HALF,
    block_sqrt,
    check_hypotheses,
    corollary1_quintuple,
    det_factor,
    li_quintuple,
    symmetric_psd_sqrt,
)
from .models import Budget, InequalityReport, Interval, MatrixQuintuple, MeasureEstimate

logger = logging.getLogger(__name__)

# seed keys of the measured terms of one report
TERM_FIRST = 0
TERM_SECOND = 1
TERM_SUM = 2
TERM_CAP = 3

SMALL_RADIUS_C = 0.374
CONTAINMENT_DIRECTIONS = 100_000
_RADIAL_BISECTIONS = 40
_ASCENT_POOL = 2_048
_ASCENT_STARTS = 4
_ASCENT_MAX_EVALS = 2_000
_MAX_CONDITION = 1e12


def _term(budget: Budget, index: int) -> Budget:
    return budget.with_seed(derive_seed(budget.seed, index))


def _same_dimension(a: Body, b: Body) -> int:
    if a.dimension != b.dimension:
        raise DimensionMismatchError(
            f"bodies must share a dimension, got {a.dimension} and {b.dimension}"
        )
    return a.dimension


def _shape(body: Body) -> str:
    return type(body).__name__


def _samples(*estimates: MeasureEstimate) -> int:
    return sum(e.samples for e in estimates)


def _base_parameters(a: Body, b: Body, budget: Budget) -> Dict[str, Any]:
    return {
        "a": _shape(a),
        "b": _shape(b),
        "confidence": budget.confidence,
        "method": budget.method,
    }


def check_gcc(
    a: Body,
    b: Body,
    budget: Optional[Budget] = None,
    *,
    name: str = "gcc",
    parameters: Optional[Dict[str, Any]] = None,
    rhs_scale: float = 1.0,
) -> InequalityReport:
    """gamma(A) gamma(B) <= rhs_scale * gamma(A ∩ B)."""
    budget = budget or Budget()
    n = _same_dimension(a, b)
    ga = measure(a, _term(budget, TERM_FIRST))
    gb = measure(b, _term(budget, TERM_SECOND))
    cap = measure(intersect(a, b), _term(budget, TERM_CAP))
    params = _base_parameters(a, b, budget)
    params.update(parameters or {})
    return InequalityReport.build(
        name,
        n,
        propagate_product([ga.interval, gb.interval]),
        cap.interval if rhs_scale == 1.0 else propagate_product([cap.interval], scale=rhs_scale),
        samples=_samples(ga, gb, cap),
        seed=budget.seed,
        parameters=params,
    )


def _singular(m: np.ndarray) -> bool:
    cond = np.linalg.cond(m)
    return not np.isfinite(cond) or cond > _MAX_CONDITION


def _quintuple_report(
    name: str,
    a: Body,
    b: Body,
    q: MatrixQuintuple,
    budget: Budget,
    parameters: Dict[str, Any],
    *,
    rhs_scale: float = 1.0,
    lhs_scale: Optional[float] = None,
    images: bool = True,
) -> InequalityReport:
    """
    Shared core of the main inequality and its specializations:
    lhs_scale * gamma(PA) gamma(RB) <= rhs_scale * gamma((S+T)^{-1}(A+B)) gamma(A ∩ B).
    """
    n = _same_dimension(a, b)
    if q.n != n:
        raise DimensionMismatchError(f"quintuple has size {q.n}, bodies have dimension {n}")
    st = q.s + q.t
    if _singular(st):
        raise SingularMatrixError(f"S + T is singular (cond {np.linalg.cond(st):.3e})")

    summed = minkowski_sum(a, b, tol=budget.minkowski_tol, max_iter=budget.minkowski_max_iter)
    g_sum = measure(linear_image(np.linalg.inv(st), summed), _term(budget, TERM_SUM))
    g_cap = measure(intersect(a, b), _term(budget, TERM_CAP))
    rhs = propagate_product([g_sum.interval, g_cap.interval], scale=rhs_scale)

    params = _base_parameters(a, b, budget)
    params.update(parameters)
    estimates = [g_sum, g_cap]

    if images and (_singular(q.p) or _singular(q.r)):
        logger.debug("%s: P or R singular, left side is 0", name)
        lhs = Interval.point(0.0)
        params["trivial"] = True
    else:
        first = linear_image(q.p, a) if images else a
        second = linear_image(q.r, b) if images else b
        g_first = measure(first, _term(budget, TERM_FIRST))
        g_second = measure(second, _term(budget, TERM_SECOND))
        scale = det_factor(q.m) if lhs_scale is None else lhs_scale
        lhs = propagate_product([g_first.interval, g_second.interval], scale=scale)
        estimates += [g_first, g_second]

    return InequalityReport.build(
        name,
        n,
        lhs,
        rhs,
        samples=_samples(*estimates),
        seed=budget.seed,
        parameters=params,
    )


def check_main_theorem(
    a: Body, b: Body, q: MatrixQuintuple, budget: Optional[Budget] = None
) -> InequalityReport:
    budget = budget or Budget()
    report = check_hypotheses(q)
    if not report.validated:
        raise InvalidQuintupleError(
            f"quintuple fails the hypotheses (max residual {report.max_residual:.3e}, "
            f"min eigenvalue of I - M^T M {report.min_eig:.3e})"
        )
    params = {"max_residual": report.max_residual, "m_norm": float(np.linalg.norm(q.m, 2))}
    return _quintuple_report("main_theorem", a, b, q, budget, params)


def check_li(
    a: Body, b: Body, p: float, r: float, budget: Optional[Budget] = None, *, name: str = "li"
) -> InequalityReport:
    """gamma(pA) gamma(rB) <= gamma(pr(A+B)) gamma(A ∩ B) for p^2 + r^2 = 1."""
    budget = budget or Budget()
    q = li_quintuple(p, r, _same_dimension(a, b))
    return _quintuple_report(name, a, b, q, budget, {"p": p, "r": r})


def check_ssz(a: Body, b: Body, budget: Optional[Budget] = None) -> InequalityReport:
    """gamma(A/sqrt2) gamma(B/sqrt2) <= gamma((A+B)/2) gamma(A ∩ B)."""
    return check_li(a, b, SQRT_HALF, SQRT_HALF, budget, name="ssz")


def check_corollary1(a: Body, b: Body, budget: Optional[Budget] = None) -> InequalityReport:
    """gamma(A) gamma(B) <= (4/3)^{n/2} gamma(sqrt3/2 (A+B)) gamma(A ∩ B)."""
    budget = budget or Budget()
    n = _same_dimension(a, b)
    q = corollary1_quintuple(n)
    return _quintuple_report(
        "corollary1",
        a,
        b,
        q,
        budget,
        {"factor": (4.0 / 3.0) ** (n / 2)},
        rhs_scale=(4.0 / 3.0) ** (n / 2),
        lhs_scale=1.0,
        images=False,
    )


def check_constant_factor(a: Body, b: Body, budget: Optional[Budget] = None) -> InequalityReport:
    """gamma(A) gamma(B) <= 2^{n/2} gamma(A ∩ B); corollary1 tightens the factor to (4/3)^{n/2}."""
    n = _same_dimension(a, b)
    factor = 2.0 ** (n / 2)
    return check_gcc(
        a,
        b,
        budget or Budget(),
        name="constant_factor",
        parameters={"factor": factor},
        rhs_scale=factor,
    )


# -----------------------------
# Small-radius bodies
# -----------------------------


def _radial_extent(body: Body, U: np.ndarray, edge: float) -> np.ndarray:
    """sup{t <= edge : t u in body} per unit row u of U, by bisection."""
    lo = np.zeros(U.shape[0])
    hi = np.full(U.shape[0], edge)
    lo[body.classify(edge * U) == MEMBER] = edge
    for _ in range(_RADIAL_BISECTIONS):
        mid = (lo + hi) / 2
        inside = body.classify(mid[:, None] * U) == MEMBER
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return lo


def _radial_ascent(
    body: Body, starts: np.ndarray, edge: float, max_evals: int = _ASCENT_MAX_EVALS
) -> Tuple[float, np.ndarray]:
    """Local maxima of the radial extent from each start direction (Nelder-Mead on the sphere)."""

    def negative_extent(v: np.ndarray) -> float:
        u = v / max(float(np.linalg.norm(v)), np.finfo(float).tiny)
        return -float(_radial_extent(body, u[None, :], edge)[0])

    best, best_u = -math.inf, starts[0]
    for u0 in starts:
        res = optimize.minimize(
            negative_extent,
            u0,
            method="Nelder-Mead",
            options={"maxfev": max_evals, "xatol": 1e-10, "fatol": 1e-13},
        )
        if -res.fun > best:
            best, best_u = -float(res.fun), res.x / np.linalg.norm(res.x)
        if best >= edge:
            break
    return best, best_u


def containment_certificate(
    body: Body, radius: float, directions: int = CONTAINMENT_DIRECTIONS, seed: int = 0
) -> Dict[str, Any]:
    """
    Evidence that body ⊆ radius * Ball.

    When the body knows its maximal norm (primitive shapes, polytopes and their linear images
    and intersections) that settles it. Otherwise any upper bound inside the ball settles it,
    and failing that the sphere just outside `radius` is sampled and the radial extent is
    climbed from the most promising directions: a convex body through 0 that leaves the ball
    crosses that sphere. Raises ContainmentError on a failed check.
    """
    if directions < 1:
        raise DomainError(f"directions must be >= 1, got {directions}")
    bound, exact = body.max_norm()
    if bound <= radius * (1.0 + 1e-12):
        method = "max_norm" if exact else "bounding_radius"
        return {"method": method, "max_norm": bound, "radius": radius}
    if exact:
        raise ContainmentError(
            f"{_shape(body)} reaches norm {bound:.6g}, outside the ball of radius {radius:.6g}"
        )

    edge = radius * (1.0 + 1e-9)
    rng = np.random.default_rng(seed)
    d = rng.standard_normal((directions, body.dimension))
    d /= np.linalg.norm(d, axis=1)[:, None]
    hits = np.flatnonzero(body.classify(edge * d) == MEMBER)
    if hits.size:
        raise ContainmentError(
            f"{_shape(body)} contains {hits.size} point(s) of norm {edge:.6g}, "
            f"e.g. {edge * d[hits[0]]}"
        )

    ranked = d[:_ASCENT_POOL]
    extent = _radial_extent(body, ranked, edge)
    starts = ranked[np.argsort(-extent)[:_ASCENT_STARTS]]
    reach, u = _radial_ascent(body, starts, edge)
    if reach >= edge:
        raise ContainmentError(f"{_shape(body)} reaches norm {edge:.6g} at {edge * u}")
    return {
        "method": "radial_ascent",
        "directions": directions,
        "max_norm": reach,
        "radius": radius,
    }


def check_small_radius(
    a: Body,
    b: Body,
    budget: Optional[Budget] = None,
    *,
    c: float = SMALL_RADIUS_C,
    directions: int = CONTAINMENT_DIRECTIONS,
    name: str = "small_radius",
) -> InequalityReport:
    """gamma(A) gamma(B) <= gamma(A ∩ B) for A, B inside the ball of radius c sqrt(n)."""
    budget = budget or Budget()
    n = _same_dimension(a, b)
    radius = c * math.sqrt(n)
    certificate = {
        "a": containment_certificate(a, radius, directions, derive_seed(budget.seed, 4)),
        "b": containment_certificate(b, radius, directions, derive_seed(budget.seed, 5)),
    }
    return check_gcc(a, b, budget, name=name, parameters={"c": c, "containment": certificate})


def check_small_radius_c0(
    a: Body, b: Body, budget: Optional[Budget] = None, *, directions: int = CONTAINMENT_DIRECTIONS
) -> InequalityReport:
    return check_small_radius(
        a, b, budget, c=constant_c0(), directions=directions, name="small_radius_c0"
    )


# -----------------------------
# Block-matrix inequalities
# -----------------------------


def _coupling(a: Body, b: Body, mmat: Any) -> np.ndarray:
    m = np.atleast_2d(np.asarray(mmat, dtype=float))
    if m.shape != (a.dimension, b.dimension):
        raise DimensionMismatchError(
            f"M must be {a.dimension}x{b.dimension}, got shape {m.shape}"
        )
    return m


def check_lemma1(
    a: Body, b: Body, mmat: Any, budget: Optional[Budget] = None
) -> InequalityReport:
    """det(I - M^T M)^{1/2} gamma(A) gamma(B) <= gamma([[I, M], [M^T, I]]^{1/2} (A x B))."""
    budget = budget or Budget()
    m = _coupling(a, b, mmat)
    factor = det_factor(m)
    pair = Product(a, b)
    shared = _term(budget, TERM_FIRST)
    g_pair = measure(pair, shared)
    g_image = measure(linear_image(block_sqrt(m), pair), shared)
    return InequalityReport.build(
        "lemma1",
        a.dimension + b.dimension,
        propagate_product([g_pair.interval], scale=factor),
        g_image.interval,
        samples=_samples(g_pair, g_image),
        seed=budget.seed,
        parameters={**_base_parameters(a, b, budget), "m": m.tolist(), "det_factor": factor},
    )


@dataclass(frozen=True, eq=False)
class CoupledPair(Body):
    """
    {(x, z) : x in first, x M + z C in second} with C = (I - M^T M)^{1/2}.
    Its standard Gaussian measure is P(X in first, Y in second) for Y = M^T X + C Z.
    """
    first: Body
    second: Body
    m: np.ndarray
    c: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.m, dtype=float)
        object.__setattr__(self, "c", symmetric_psd_sqrt(np.eye(m.shape[1]) - m.T @ m))

    @property
    def dimension(self) -> int:
        return self.first.dimension + self.second.dimension

    def classify(self, X: np.ndarray) -> np.ndarray:
        k = self.first.dimension
        x, z = X[:, :k], X[:, k:]
        out = self.first.classify(x)
        alive = out != NON_MEMBER
        if alive.any():
            y = row_matmul(x[alive], self.m) + row_matmul(z[alive], self.c)
            out[alive] = conjunction(out[alive], self.second.classify(y))
        return out


def check_shao(
    a: Body, b: Body, mmat: Any, budget: Optional[Budget] = None
) -> InequalityReport:
    """P(X in A) P(Y in B) <= det(I - M^T M)^{-1/2} P(X in A, Y in B)."""
    budget = budget or Budget()
    m = _coupling(a, b, mmat)
    factor = det_factor(m)
    ga = measure(a, _term(budget, TERM_FIRST))
    gb = measure(b, _term(budget, TERM_SECOND))
    joint = measure(
        CoupledPair(a, b, m), _term(budget, TERM_SUM), blocks=(a.dimension, b.dimension)
    )
    return InequalityReport.build(
        "shao",
        a.dimension + b.dimension,
        propagate_product([ga.interval, gb.interval]),
        propagate_product([joint.interval], scale=1.0 / factor),
        samples=_samples(ga, gb, joint),
        seed=budget.seed,
        parameters={**_base_parameters(a, b, budget), "m": m.tolist(), "det_factor": factor},
    )


def check_anderson(c: Body, k: Any, budget: Optional[Budget] = None) -> InequalityReport:
    """gamma(C) <= gamma((I + K) C) for positive semidefinite K."""
    budget = budget or Budget()
    kmat = np.atleast_2d(np.asarray(k, dtype=float))
    n = c.dimension
    if kmat.shape != (n, n):
        raise DimensionMismatchError(f"K must be {n}x{n}, got shape {kmat.shape}")
    if np.max(np.abs(kmat - kmat.T), initial=0.0) > 1e-12:
        raise DomainError("K must be symmetric")
    lo = float(np.linalg.eigvalsh(kmat)[0])
    if lo < -1e-12:
        raise DomainError(f"K must be positive semidefinite, min eigenvalue {lo:.3e}")

    shared = _term(budget, TERM_FIRST)
    g_body = measure(c, shared)
    g_image = measure(linear_image(np.eye(n) + kmat, c), shared)
    return InequalityReport.build(
        "anderson",
        n,
        g_body.interval,
        g_image.interval,
        samples=_samples(g_body, g_image),
        seed=budget.seed,
        parameters={"c": _shape(c), "k": kmat.tolist(), "confidence": budget.confidence},
    )


CHECKERS: Sequence[str] = (
    "gcc",
    "main",
    "ssz",
    "li",
    "corollary1",
    "constant_factor",
    "small_radius",
    "small_radius_c0",
    "lemma1",
    "shao",
    "anderson",
)

