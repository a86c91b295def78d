from __future__ import annotations

import logging
import math
from typing import Iterable, List

from scipy import optimize

from .errors import ConvergenceError, DomainError
from .gaussian import measure_ball_exact
from .models import TailComparison

logger = logging.getLogger(__name__)

DOMINANCE_KS = tuple(round(0.05 * i, 2) for i in range(1, 21))
DOMINANCE_NS = tuple(range(1, 65))
_OPTIMALITY_TOL = 1e-8


def _check_k(k: float) -> None:
    if not (0.0 < k <= 1.0):
        raise DomainError(f"k must be in (0, 1], got {k}")


def _check_n(n: int) -> None:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")


def log_chernoff_bound(k: float, n: int) -> float:
    _check_k(k)
    _check_n(n)
    return (n / 2) * (2.0 * math.log(k) + 1.0 - k * k)


def chernoff_bound(k: float, n: int) -> float:
    """(k^2 e^{1-k^2})^{n/2}: upper bound on the Gaussian measure of the ball of radius k sqrt(n)."""
    return math.exp(log_chernoff_bound(k, n))


def markov_bound(k: float, n: int, t: float) -> float:
    """(e^{t k^2} / (1 + t))^{n/2}, the Markov bound before optimizing over t."""
    _check_k(k)
    _check_n(n)
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    return math.exp((n / 2) * (t * k * k - math.log1p(t)))


def optimal_t(k: float) -> float:
    """Minimizer (1 - k^2)/k^2 of the Markov bound, checked by a central difference."""
    _check_k(k)
    t = (1.0 - k * k) / (k * k)

    def f(u: float) -> float:
        return math.exp(0.5 * (u * k * k - math.log1p(u)))

    h = 1e-6 * max(1.0, t)
    slope = (f(t + h) - f(t - h)) / (2 * h)
    if abs(slope) > _OPTIMALITY_TOL:
        raise ConvergenceError(f"derivative at t={t:.6g} is {slope:.3e}, not stationary")
    return t


def _c1_equation(c: float) -> float:
    u = 3.0 * c * c
    return u * math.exp(1.0 - u) - 0.75


def find_c1(tol: float = 1e-10) -> float:
    """Smallest positive root of 3c^2 e^{1 - 3c^2} = 3/4, by bisection on (0, 3^{-1/2})."""
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    lo, hi = 0.0, 1.0 / math.sqrt(3.0)
    if not (_c1_equation(lo) < 0 < _c1_equation(hi)):
        raise ConvergenceError("bracket (0, 3^{-1/2}) does not straddle a root")
    root = optimize.bisect(_c1_equation, lo, hi, xtol=tol, maxiter=200)
    logger.debug("c1 = %.12f (tol %.1e)", root, tol)
    return float(root)


def constant_c0() -> float:
    return 0.5 * math.exp(-0.5)


def corollary2_condition(c: float, n: int) -> float:
    """(4/3)^{n/2} (3c^2 e^{1-3c^2})^{n/2}; at most 1 exactly when c <= c1."""
    _check_n(n)
    if not c > 0:
        raise DomainError(f"c must be > 0, got {c}")
    u = 3.0 * c * c
    return math.exp((n / 2) * (math.log(4.0 / 3.0) + math.log(u) + 1.0 - u))


def bound_vs_exact(k: float, n: int) -> TailComparison:
    bound = chernoff_bound(k, n)
    exact = measure_ball_exact(k * math.sqrt(n), n).value
    return TailComparison(k=k, n=n, exact=exact, bound=bound)


def dominance_grid(
    ks: Iterable[float] = DOMINANCE_KS, ns: Iterable[int] = DOMINANCE_NS
) -> List[TailComparison]:
    ns = list(ns)
    return [bound_vs_exact(k, n) for k in ks for n in ns]
