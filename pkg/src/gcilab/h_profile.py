from __future__ import annotations

import logging
import math
from itertools import combinations
from typing import Any, List, Optional, Sequence

import numpy as np

from .convex_sets import (
    DEFAULT_MINKOWSKI_MAX_ITER,
    DEFAULT_MINKOWSKI_TOL,
    Body,
    intersect,
    minkowski_member,
    translate,
)
from .errors import DimensionMismatchError, DomainError, UnsupportedShapeError
from .gaussian import measure, propagate_product
from .models import (
    Budget,
    HProfile,
    HPropertyReport,
    InequalityReport,
    Interval,
    SupportCheck,
)

logger = logging.getLogger(__name__)

_SAME_POINT = 1e-12


def h_body(a: Body, b: Body, s: np.ndarray, t: np.ndarray, y: np.ndarray) -> Body:
    """(A - S y) ∩ (B + T y)."""
    return intersect(translate(a, -(s @ y)), translate(b, t @ y))


def h_profile(
    a: Body,
    b: Body,
    s: Any,
    t: Any,
    ys: Sequence[Any],
    budget: Optional[Budget] = None,
) -> HProfile:
    """h(y) = gamma((A - Sy) ∩ (B + Ty)) on every y, all with the budget's seed."""
    budget = budget or Budget()
    n = a.dimension
    if b.dimension != n:
        raise DimensionMismatchError(f"bodies must share a dimension, got {n} and {b.dimension}")
    s = np.atleast_2d(np.asarray(s, dtype=float))
    t = np.atleast_2d(np.asarray(t, dtype=float))
    if s.shape != (n, n) or t.shape != (n, n):
        raise DimensionMismatchError(f"S and T must be {n}x{n}, got {s.shape} and {t.shape}")

    points = [np.asarray(y, dtype=float).reshape(-1) for y in ys]
    for y in points:
        if y.size != n:
            raise DimensionMismatchError(f"y must have length {n}, got {y.size}")

    values = [measure(h_body(a, b, s, t, y), budget) for y in points]
    logger.debug("h profile: %d points in dimension %d", len(points), n)
    return HProfile(a=a, b=b, s=s, t=t, ys=points, values=values)


def midpoint_design(points: Sequence[Any]) -> List[np.ndarray]:
    """0, the given points, and every pairwise midpoint."""
    pts = [np.asarray(p, dtype=float).reshape(-1) for p in points]
    if not pts:
        raise DomainError("midpoint_design needs at least one point")
    out = [np.zeros_like(pts[0])] + pts
    out += [(p + q) / 2 for p, q in combinations(pts, 2)]
    return out


def _find(ys: List[np.ndarray], target: np.ndarray) -> Optional[int]:
    for i, y in enumerate(ys):
        if np.max(np.abs(y - target)) <= _SAME_POINT:
            return i
    return None


def _sqrt_interval(iv: Interval) -> Interval:
    return Interval(math.sqrt(iv.value), math.sqrt(iv.low), math.sqrt(iv.high))


def h_property_suite(
    profile: HProfile,
    minkowski_tol: float = DEFAULT_MINKOWSKI_TOL,
    minkowski_max_iter: int = DEFAULT_MINKOWSKI_MAX_ITER,
) -> HPropertyReport:
    """
    Checks maximality at 0, midpoint log-concavity on every (y1, y2, (y1+y2)/2) triple present in
    the profile, and that h(y) > 0 only where (S+T) y lies in A + B.
    """
    ys, values = profile.ys, profile.values
    n = profile.s.shape[0]
    zero = _find(ys, np.zeros(n))
    if zero is None:
        raise DomainError("profile must include y = 0")
    h0 = values[zero]

    max_at_zero = []
    for i, (y, v) in enumerate(zip(ys, values)):
        if i == zero:
            continue
        max_at_zero.append(
            InequalityReport.build(
                "h_max_at_zero",
                n,
                v.interval,
                h0.interval,
                samples=v.samples + h0.samples,
                seed=v.seed or 0,
                parameters={"y": y.tolist()},
            )
        )

    log_concavity = []
    for i, j in combinations(range(len(ys)), 2):
        mid = _find(ys, (ys[i] + ys[j]) / 2)
        if mid is None or mid in (i, j):
            continue
        lhs = _sqrt_interval(propagate_product([values[i].interval, values[j].interval]))
        log_concavity.append(
            InequalityReport.build(
                "h_midpoint_log_concavity",
                n,
                lhs,
                values[mid].interval,
                samples=values[i].samples + values[j].samples + values[mid].samples,
                seed=values[mid].seed or 0,
                parameters={"y1": ys[i].tolist(), "y2": ys[j].tolist()},
            )
        )

    support = []
    st = profile.s + profile.t
    for y, v in zip(ys, values):
        if v.value <= 0:
            continue
        try:
            verdict = minkowski_member(
                profile.a, profile.b, st @ y, tol=minkowski_tol, max_iter=minkowski_max_iter
            )
        except UnsupportedShapeError as e:
            logger.debug("support check skipped: %s", e)
            continue
        support.append(SupportCheck(y=y.tolist(), h_value=v.value, minkowski=verdict.value))

    return HPropertyReport(max_at_zero=max_at_zero, log_concavity=log_concavity, support=support)
