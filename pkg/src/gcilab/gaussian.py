from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Optional, Sequence, Tuple

import numpy as np
from scipy import special

from .convex_sets import (
    MEMBER,
    UNDECIDED,
    Ball,
    Body,
    Box,
    Intersection,
    LinearImage,
    Product,
)
from .errors import DomainError
from .models import Budget, Interval, MeasureEstimate, Source

logger = logging.getLogger(__name__)

CHUNK_SIZE = 4096
QUADRATURE_MAX_DIMENSION = 3
_SLAB_POINTS = 1 << 18
_FIRST_ORDER_LIMIT = 0.1


def normal_cdf(x: float) -> float:
    return float(special.ndtr(x))


def derive_seed(seed: int, *keys: int) -> int:
    """Counter-based child seed: the first word of SeedSequence([seed, *keys])."""
    return int(np.random.SeedSequence([int(seed), *(int(k) for k in keys)]).generate_state(1)[0])


def wilson_interval(hits: float, trials: float, confidence: float) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion (hits may be fractional)."""
    if trials <= 0:
        raise DomainError(f"trials must be > 0, got {trials}")
    if not (0.0 < confidence < 1.0):
        raise DomainError(f"confidence must be in (0, 1), got {confidence}")
    if not (0 <= hits <= trials):
        raise DomainError(f"hits must be in [0, trials], got {hits} of {trials}")

    z = float(special.ndtri(0.5 + confidence / 2))
    p = hits / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    low = max(0.0, min(p, center - half))
    high = min(1.0, max(p, center + half))
    if hits == trials:
        high = 1.0
    if hits == 0:
        low = 0.0
    return low, high


def measure_ball_exact(radius: float, n: int) -> MeasureEstimate:
    if not radius > 0:
        raise DomainError(f"radius must be > 0, got {radius}")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return MeasureEstimate.exact(float(special.gammainc(n / 2, radius * radius / 2)))


def measure_box_exact(halfwidths: Sequence[float]) -> MeasureEstimate:
    w = np.asarray(halfwidths, dtype=float).reshape(-1)
    if w.size == 0 or not np.all(w > 0):
        raise DomainError(f"halfwidths must be positive, got {w}")
    # 2 Phi(w) - 1 == erf(w / sqrt 2)
    return MeasureEstimate.exact(float(np.prod(special.erf(w / math.sqrt(2)))))


# -----------------------------
# Monte Carlo
# -----------------------------


def sign_orbit(n: int, blocks: Optional[Tuple[int, int]] = None) -> np.ndarray:
    """Sign patterns applied to every draw: {x, -x}, or {(+-x1, +-x2)} for a block split."""
    if blocks is None:
        return np.vstack([np.ones(n), -np.ones(n)])
    m, k = blocks
    if m < 1 or k < 1 or m + k != n:
        raise DomainError(f"blocks {blocks} do not split dimension {n}")
    rows = []
    for s1 in (1.0, -1.0):
        for s2 in (1.0, -1.0):
            rows.append(np.concatenate([np.full(m, s1), np.full(k, s2)]))
    return np.vstack(rows)


def _count_chunk(
    body: Body, seed: int, index: int, draws: int, signs: np.ndarray
) -> Tuple[int, int]:
    rng = np.random.default_rng([seed, index])
    z = rng.standard_normal((draws, body.dimension))
    X = (signs[:, None, :] * z[None, :, :]).reshape(-1, body.dimension)
    codes = body.classify(X)
    return int(np.count_nonzero(codes == MEMBER)), int(np.count_nonzero(codes == UNDECIDED))


def measure_mc(
    body: Body,
    samples: int,
    seed: int,
    confidence: float,
    *,
    blocks: Optional[Tuple[int, int]] = None,
    workers: int = 1,
) -> MeasureEstimate:
    """
    Seeded Monte Carlo estimate of the Gaussian measure of `body`.

    Draws come in chunks of CHUNK_SIZE evaluations; chunk i uses default_rng([seed, i]), and each
    draw is evaluated over its whole sign orbit. The Wilson interval is taken over independent
    draws (samples / orbit size). The result depends only on (seed, samples, confidence, blocks).
    """
    if samples < 100:
        raise DomainError(f"samples must be >= 100, got {samples}")
    if not (0.0 < confidence < 1.0):
        raise DomainError(f"confidence must be in (0, 1), got {confidence}")

    signs = sign_orbit(body.dimension, blocks)
    orbit = signs.shape[0]
    draws = -(-samples // orbit)
    per_chunk = CHUNK_SIZE // orbit
    sizes = [min(per_chunk, draws - start) for start in range(0, draws, per_chunk)]

    def run(i: int) -> Tuple[int, int]:
        return _count_chunk(body, seed, i, sizes[i], signs)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            counts = list(pool.map(run, range(len(sizes))))
    else:
        counts = [run(i) for i in range(len(sizes))]

    hits = sum(c[0] for c in counts)
    undecided = sum(c[1] for c in counts)
    evaluations = draws * orbit

    value = hits / evaluations
    low, _ = wilson_interval(value * draws, draws, confidence)
    _, high = wilson_interval(min(draws, (hits + undecided) / evaluations * draws), draws, confidence)
    logger.debug(
        "mc: %d evaluations in %d chunks, hits=%d undecided=%d", evaluations, len(sizes), hits, undecided
    )
    if undecided:
        logger.warning("%d of %d evaluations had undecided membership", undecided, evaluations)
    return MeasureEstimate(
        value=value,
        ci_low=min(low, value),
        ci_high=max(high, value),
        source=Source.MONTE_CARLO,
        samples=evaluations,
        seed=int(seed),
        undecided=undecided,
    )


# -----------------------------
# Quadrature
# -----------------------------


def _grid_mass(body: Body, bounds: float, cells: int) -> Tuple[float, float]:
    n = body.dimension
    edges = np.linspace(-bounds, bounds, cells + 1)
    mids = (edges[:-1] + edges[1:]) / 2
    mass = np.diff(special.ndtr(edges))

    if n == 1:
        rest = np.zeros((1, 0))
        rest_w = np.ones(1)
    else:
        grids = np.meshgrid(*([mids] * (n - 1)), indexing="ij")
        rest = np.stack([g.reshape(-1) for g in grids], axis=1)
        weights = np.meshgrid(*([mass] * (n - 1)), indexing="ij")
        rest_w = np.prod(np.stack([w.reshape(-1) for w in weights], axis=1), axis=1)

    step = max(1, _SLAB_POINTS // rest.shape[0])
    member = 0.0
    undecided = 0.0
    for start in range(0, cells, step):
        first = mids[start:start + step]
        X = np.hstack([np.repeat(first, rest.shape[0])[:, None], np.tile(rest, (first.size, 1))])
        W = np.repeat(mass[start:start + step], rest.shape[0]) * np.tile(rest_w, first.size)
        codes = body.classify(X)
        member += float(np.sum(W[codes == MEMBER]))
        undecided += float(np.sum(W[codes == UNDECIDED]))
    return member, undecided


def measure_quadrature(
    body: Body, bounds: float = 8.0, cells_per_axis: Optional[int] = None
) -> MeasureEstimate:
    """
    Midpoint-rule estimate on [-bounds, bounds]^n with exact per-cell Gaussian masses.
    The interval covers the truncated tail and the change against a grid with half the cells.
    """
    n = body.dimension
    if n > QUADRATURE_MAX_DIMENSION:
        raise DomainError(f"quadrature supports dimension <= {QUADRATURE_MAX_DIMENSION}, got {n}")
    if bounds < 8:
        raise DomainError(f"bounds must be >= 8, got {bounds}")
    cells = cells_per_axis if cells_per_axis is not None else (1024 if n <= 2 else 128)
    if cells < 64 or cells % 2:
        raise DomainError(f"cells_per_axis must be even and >= 64, got {cells}")

    fine, fine_und = _grid_mass(body, bounds, cells)
    coarse, coarse_und = _grid_mass(body, bounds, cells // 2)
    tail = 2 * n * float(special.ndtr(-bounds))
    drift = abs(fine - coarse) + abs(fine_und - coarse_und)

    value = min(1.0, max(0.0, fine))
    low = max(0.0, min(value, fine - drift))
    high = min(1.0, max(value, fine + fine_und + drift + tail))
    logger.debug("quadrature: n=%d cells=%d value=%.12f drift=%.2e", n, cells, value, drift)
    return MeasureEstimate(value=value, ci_low=low, ci_high=high, source=Source.QUADRATURE)


# -----------------------------
# Dispatch
# -----------------------------


def _scaled_orthogonal(t: np.ndarray) -> Optional[float]:
    """c when t = c U with U orthogonal (to 1e-12), else None."""
    g = t.T @ t
    c2 = float(np.mean(np.diag(g)))
    if c2 <= 0 or np.max(np.abs(g - c2 * np.eye(t.shape[0]))) > 1e-12 * c2:
        return None
    return round(math.sqrt(c2), 12)


def simplify(body: Body) -> Body:
    """Rewrite a body into an equal body with a closed-form measure where one is known."""
    if isinstance(body, LinearImage):
        t = body.transform
        base = simplify(body.base)
        if np.array_equal(t, np.eye(t.shape[0])):
            return base
        if isinstance(base, Box) and np.count_nonzero(t - np.diag(np.diag(t))) == 0:
            return Box(np.abs(np.diag(t)) * base.halfwidths)
        if isinstance(base, Ball):
            c = _scaled_orthogonal(t)
            if c is not None:
                return Ball(c * base.radius, base.dimension)
        return body if base is body.base else LinearImage(t, base)
    if isinstance(body, Intersection):
        if body.left is body.right:
            return simplify(body.left)
        left, right = simplify(body.left), simplify(body.right)
        if isinstance(left, Ball) and isinstance(right, Ball):
            return left if left.radius <= right.radius else right
        if isinstance(left, Box) and isinstance(right, Box):
            return Box(np.minimum(left.halfwidths, right.halfwidths))
        if left is body.left and right is body.right:
            return body
        return Intersection(left, right)
    return body


def multiply_estimates(a: MeasureEstimate, b: MeasureEstimate, seed: Optional[int]) -> MeasureEstimate:
    """Measure of a Cartesian product from the measures of its factors."""
    if a.source is Source.EXACT and b.source is Source.EXACT:
        return MeasureEstimate.exact(a.value * b.value)
    sources = {a.source, b.source}
    source = Source.MONTE_CARLO if Source.MONTE_CARLO in sources else Source.QUADRATURE
    value = a.value * b.value
    return MeasureEstimate(
        value=value,
        ci_low=min(value, a.ci_low * b.ci_low),
        ci_high=max(value, min(1.0, a.ci_high * b.ci_high)),
        source=source,
        samples=a.samples + b.samples,
        seed=seed,
        undecided=a.undecided + b.undecided,
    )


def measure(
    body: Body, budget: Optional[Budget] = None, *, blocks: Optional[Tuple[int, int]] = None
) -> MeasureEstimate:
    """
    Gaussian measure with the cheapest faithful method: closed forms for balls, boxes and bodies
    that simplify to them, factorization for products, then quadrature (method="quadrature",
    n <= 3) or Monte Carlo.
    """
    budget = budget or Budget()
    body = simplify(body)

    if isinstance(body, Ball):
        logger.debug("measure: exact ball r=%s n=%d", body.radius, body.dimension)
        return measure_ball_exact(body.radius, body.dimension)
    if isinstance(body, Box):
        logger.debug("measure: exact box n=%d", body.dimension)
        return measure_box_exact(body.halfwidths)
    if isinstance(body, Product) and blocks is None:
        left = measure(body.left, budget.with_seed(derive_seed(budget.seed, 0)))
        right = measure(body.right, budget.with_seed(derive_seed(budget.seed, 1)))
        return multiply_estimates(left, right, budget.seed)

    if budget.method == "quadrature" and body.dimension <= QUADRATURE_MAX_DIMENSION:
        return measure_quadrature(body, budget.bounds, budget.cells_per_axis)

    logger.debug("measure: monte carlo on %s n=%d", type(body).__name__, body.dimension)
    return measure_mc(
        body,
        budget.samples,
        budget.seed,
        budget.confidence,
        blocks=blocks,
        workers=budget.workers,
    )


def propagate_product(factors: Iterable[Interval], scale: float = 1.0) -> Interval:
    """
    Interval for scale * prod(factors) over nonnegative factors.

    First-order propagation (relative errors added in quadrature, each side separately) while
    every relative half-width is below 0.1; otherwise the plain interval product.
    """
    factors = list(factors)
    if scale < 0:
        raise DomainError(f"scale must be >= 0, got {scale}")
    value = scale * math.prod(f.value for f in factors)
    if all(f.is_point for f in factors):
        return Interval.point(value)

    if all(f.value > 0 for f in factors):
        rel_low = [(f.value - f.low) / f.value for f in factors]
        rel_high = [(f.high - f.value) / f.value for f in factors]
        if max(rel_low + rel_high) < _FIRST_ORDER_LIMIT:
            low = value * (1.0 - math.sqrt(sum(r * r for r in rel_low)))
            high = value * (1.0 + math.sqrt(sum(r * r for r in rel_high)))
            return Interval(value, min(low, value), max(high, value))

    low = scale * math.prod(f.low for f in factors)
    high = scale * math.prod(f.high for f in factors)
    return Interval(value, min(low, value), max(high, value))
