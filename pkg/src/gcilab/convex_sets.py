from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize, spatial

from .errors import (
    ConvergenceError,
    DimensionMismatchError,
    DomainError,
    SingularMatrixError,
    UnsupportedShapeError,
)

logger = logging.getLogger(__name__)

# classify() codes
MEMBER = 1
NON_MEMBER = 0
UNDECIDED = -1

_BOUNDARY_RTOL = 1e-12
_MAX_CONDITION = 1e12

_NEWTON_TOL = 1e-12
_NEWTON_MAX_ITER = 200

_DYKSTRA_TOL = 1e-10
_DYKSTRA_MAX_CYCLES = 2_000
_DYKSTRA_CHECK_EVERY = 10
_CERTIFICATE_TOL = 1e-9
_VERTEX_MAX_DIM = 10

DEFAULT_MINKOWSKI_TOL = 1e-7
DEFAULT_MINKOWSKI_MAX_ITER = 10_000
_STALL_WINDOW = 50

BODY_KINDS = ("ball", "box", "ellipsoid", "polytope")


class MinkowskiVerdict(str, Enum):
    MEMBER = "member"
    NON_MEMBER = "non_member"
    UNDECIDED = "undecided"


_VERDICTS = {
    MEMBER: MinkowskiVerdict.MEMBER,
    NON_MEMBER: MinkowskiVerdict.NON_MEMBER,
    UNDECIDED: MinkowskiVerdict.UNDECIDED,
}


def _as_points(x: Any, dimension: int) -> Tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dimension:
        raise DimensionMismatchError(
            f"expected points of dimension {dimension}, got shape {np.shape(x)}"
        )
    return arr, single


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def row_dot(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """
    Row-wise inner products, accumulated column by column. The result for a row does not depend
    on where the row sits in the batch, and flipping the sign of a row flips it exactly.
    """
    out = X[:, 0] * Y[:, 0]
    for j in range(1, X.shape[1]):
        out = out + X[:, j] * Y[:, j]
    return out


def row_matmul(X: np.ndarray, A: np.ndarray) -> np.ndarray:
    """X @ A with a fixed, position-independent accumulation order per row (see row_dot)."""
    out = X[:, 0:1] * A[0]
    for i in range(1, X.shape[1]):
        out = out + X[:, i:i + 1] * A[i]
    return out


def conjunction(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    both = (left == MEMBER) & (right == MEMBER)
    out = np.where(both, MEMBER, UNDECIDED)
    out[(left == NON_MEMBER) | (right == NON_MEMBER)] = NON_MEMBER
    return out.astype(np.int8)


class Body:
    """
    A subset of R^n given by a batched membership oracle.

    Subclasses implement `_contains` (two-valued) or override `classify` (three-valued:
    MEMBER / NON_MEMBER / UNDECIDED). Primitive shapes also implement `_project`.
    """

    dimension: int
    symmetric: bool = True

    def _contains(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def classify(self, X: np.ndarray) -> np.ndarray:
        return np.where(self._contains(X), MEMBER, NON_MEMBER).astype(np.int8)

    def contains(self, x: Any) -> Any:
        X, single = _as_points(x, self.dimension)
        inside = self.classify(X) == MEMBER
        return bool(inside[0]) if single else inside

    def _project(self, X: np.ndarray) -> np.ndarray:
        raise UnsupportedShapeError(f"projection onto {type(self).__name__} is not supported")

    def project(self, x: Any) -> np.ndarray:
        X, single = _as_points(x, self.dimension)
        P = self._project(X)
        return P[0] if single else P

    def bounding_radius(self) -> float:
        """Upper bound of ||x|| over the body (inf when unknown)."""
        return math.inf

    def max_norm(self) -> Tuple[float, bool]:
        """(bounding_radius(), whether that bound is the attained maximum of ||x||)."""
        return self.bounding_radius(), False


@dataclass(frozen=True, eq=False)
class Ball(Body):
    radius: float
    dimension: int

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise DomainError(f"radius must be > 0, got {self.radius}")
        if self.dimension < 1:
            raise DomainError(f"dimension must be >= 1, got {self.dimension}")
        object.__setattr__(self, "radius", float(self.radius))
        object.__setattr__(self, "dimension", int(self.dimension))

    def _contains(self, X: np.ndarray) -> np.ndarray:
        return row_dot(X, X) <= self.radius**2 * (1.0 + _BOUNDARY_RTOL)

    def _project(self, X: np.ndarray) -> np.ndarray:
        norms = np.linalg.norm(X, axis=1)
        scale = np.minimum(1.0, self.radius / np.maximum(norms, np.finfo(float).tiny))
        return X * scale[:, None]

    def bounding_radius(self) -> float:
        return self.radius

    def max_norm(self) -> Tuple[float, bool]:
        return self.radius, True


@dataclass(frozen=True, eq=False)
class Box(Body):
    halfwidths: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.halfwidths, dtype=float).reshape(-1)
        if w.size == 0 or not np.all(w > 0):
            raise DomainError(f"halfwidths must be a non-empty vector of positive reals, got {w}")
        object.__setattr__(self, "halfwidths", _readonly(w))

    @property
    def dimension(self) -> int:
        return int(self.halfwidths.size)

    def _contains(self, X: np.ndarray) -> np.ndarray:
        return np.all(np.abs(X) <= self.halfwidths * (1.0 + _BOUNDARY_RTOL), axis=1)

    def _project(self, X: np.ndarray) -> np.ndarray:
        return np.clip(X, -self.halfwidths, self.halfwidths)

    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.halfwidths))

    def max_norm(self) -> Tuple[float, bool]:
        return self.bounding_radius(), True


@dataclass(frozen=True, eq=False)
class Ellipsoid(Body):
    """{x : <x, Q x> <= 1} for symmetric positive semidefinite Q."""
    q: np.ndarray
    _eigvals: np.ndarray = field(init=False, repr=False)
    _eigvecs: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        q = np.array(self.q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1] or q.shape[0] == 0:
            raise DomainError(f"q must be a non-empty square matrix, got shape {q.shape}")
        scale = max(1.0, float(np.max(np.abs(q))))
        if np.max(np.abs(q - q.T)) > 1e-10 * scale:
            raise DomainError("q must be symmetric")
        q = (q + q.T) / 2
        w, u = linalg.eigh(q)
        if w[0] < -1e-10 * scale:
            raise DomainError(f"q must be positive semidefinite, min eigenvalue {w[0]:.3e}")
        object.__setattr__(self, "q", _readonly(q))
        object.__setattr__(self, "_eigvals", _readonly(np.clip(w, 0.0, None)))
        object.__setattr__(self, "_eigvecs", _readonly(u))

    @property
    def dimension(self) -> int:
        return int(self.q.shape[0])

    def _quadratic(self, X: np.ndarray) -> np.ndarray:
        return row_dot(row_matmul(X, self.q), X)

    def _contains(self, X: np.ndarray) -> np.ndarray:
        return self._quadratic(X) <= 1.0 + _BOUNDARY_RTOL

    def _project(self, X: np.ndarray) -> np.ndarray:
        """
        Nearest point via the Lagrange condition p = (I + lam Q)^{-1} x, solving
        phi(lam) = <p, Q p> - 1 = 0 in the eigenbasis of Q by Newton's method from lam = 0.
        phi is convex and decreasing, so the iterates increase monotonically to the root.
        """
        out = X.copy()
        outside = ~self._contains(X)
        if not outside.any():
            return out

        d = self._eigvals
        Y = X[outside] @ self._eigvecs
        lam = np.zeros(Y.shape[0])
        active = np.ones(Y.shape[0], dtype=bool)

        for _ in range(_NEWTON_MAX_ITER):
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            y2 = Y[idx] ** 2
            cur = lam[idx]
            denom = 1.0 + cur[:, None] * d
            phi = np.sum(d * y2 / denom**2, axis=1) - 1.0
            dphi = -2.0 * np.sum(d**2 * y2 / denom**3, axis=1)
            proposal = cur - phi / dphi
            # safeguard: Newton must move right while phi > 0
            bad = ~np.isfinite(proposal) | (proposal < cur)
            proposal = np.where(bad & (phi > 0), 2.0 * cur + 1.0, proposal)
            settled = np.abs(phi) <= _NEWTON_TOL
            lam[idx] = np.where(settled, cur, np.maximum(proposal, 0.0))
            done = settled | (np.abs(proposal - cur) <= _NEWTON_TOL * (1.0 + cur))
            active[idx[done]] = False

        if active.any():
            raise ConvergenceError(
                f"ellipsoid projection did not converge in {_NEWTON_MAX_ITER} Newton steps "
                f"({int(active.sum())} points); q is likely ill-conditioned"
            )

        out[outside] = (Y / (1.0 + lam[:, None] * d)) @ self._eigvecs.T
        return out

    def bounding_radius(self) -> float:
        lo = float(self._eigvals[0])
        return 1.0 / math.sqrt(lo) if lo > 0 else math.inf

    def max_norm(self) -> Tuple[float, bool]:
        return self.bounding_radius(), True


@dataclass(frozen=True, eq=False)
class Polytope(Body):
    """
    Symmetric polytope {x : |<a_i, x>| <= c_i}. Each row of `normals` stands for the pair of
    half-spaces <a_i, x> <= c_i and <-a_i, x> <= c_i, so central symmetry is structural.
    """
    normals: np.ndarray
    offsets: np.ndarray
    _cache: Dict[str, Any] = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self) -> None:
        a = np.array(self.normals, dtype=float)
        c = np.array(self.offsets, dtype=float).reshape(-1)
        if a.ndim != 2 or a.shape[0] == 0 or a.shape[0] != c.size:
            raise DomainError(
                f"normals must be (k, n) with k offsets, got {a.shape} and {c.size} offsets"
            )
        norms = np.linalg.norm(a, axis=1)
        if np.any(norms == 0):
            raise DomainError("half-space normals must be nonzero")
        if np.any(c < 0):
            raise DomainError("half-space offsets must be >= 0")
        object.__setattr__(self, "normals", _readonly(a / norms[:, None]))
        object.__setattr__(self, "offsets", _readonly(c))

    @classmethod
    def from_halfspaces(cls, halfspaces: Sequence[Tuple[Any, float]]) -> Polytope:
        normals = [np.asarray(a, dtype=float) for a, _ in halfspaces]
        offsets = [float(c) for _, c in halfspaces]
        return cls(np.vstack(normals), np.array(offsets))

    @property
    def dimension(self) -> int:
        return int(self.normals.shape[1])

    @property
    def halfspaces(self) -> List[Tuple[np.ndarray, float]]:
        return [(a.copy(), float(c)) for a, c in zip(self.normals, self.offsets)]

    def _contains(self, X: np.ndarray) -> np.ndarray:
        margins = np.abs(row_matmul(X, self.normals.T))
        return np.all(margins <= self.offsets * (1.0 + _BOUNDARY_RTOL), axis=1)

    def _project(self, X: np.ndarray) -> np.ndarray:
        out = X.copy()
        outside = ~self._contains(X)
        if outside.any():
            a = np.vstack([self.normals, -self.normals])
            c = np.concatenate([self.offsets, self.offsets])
            out[outside] = _dykstra(a, c, X[outside])
        return out

    def max_norm(self) -> Tuple[float, bool]:
        if "max_norm" not in self._cache:
            self._cache["max_norm"] = _polytope_max_norm(self.normals, self.offsets)
        return self._cache["max_norm"]

    def bounding_radius(self) -> float:
        return self.max_norm()[0]


def _polytope_max_norm(normals: np.ndarray, offsets: np.ndarray) -> Tuple[float, bool]:
    """
    max ||x|| over {|<a_i, x>| <= c_i}. One LP per axis settles boundedness and gives the
    extent box; the maximum itself is taken over the vertices (qhull) in low dimension.
    Falls back to the norm of the extent box, flagged as not attained.
    """
    n = normals.shape[1]
    a = np.vstack([normals, -normals])
    c = np.concatenate([offsets, offsets])
    extent = np.empty(n)
    for j in range(n):
        res = optimize.linprog(
            -np.eye(n)[j], A_ub=a, b_ub=c, bounds=[(None, None)] * n, method="highs"
        )
        if res.status == 3:
            return math.inf, True
        if res.status != 0:
            raise ConvergenceError(f"extent LP along axis {j} failed: {res.message}")
        extent[j] = -float(res.fun)
    if n == 1:
        return float(extent[0]), True
    box = float(np.linalg.norm(extent))
    if n > _VERTEX_MAX_DIM or np.any(offsets <= 0):
        return box, False
    try:
        hull = spatial.HalfspaceIntersection(np.hstack([a, -c[:, None]]), np.zeros(n))
    except spatial.QhullError as e:
        logger.debug("vertex enumeration failed, using the extent box: %s", e)
        return box, False
    return float(np.max(np.linalg.norm(hull.intersections, axis=1))), True


def _kkt_gap(
    normals: np.ndarray, offsets: np.ndarray, x: np.ndarray, multipliers: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-point (gap, violation) for x = X - sum_i lam_i a_i. For every feasible z,
    <X - x, z - x> <= sum_i lam_i (c_i - <a_i, x>)_+ = gap.
    """
    slack = offsets - x @ normals.T
    gap = np.sum(multipliers * np.maximum(slack, 0.0), axis=1)
    violation = np.max(-slack, axis=1)
    return gap, violation


def _least_distance(normals: np.ndarray, offsets: np.ndarray, x0: np.ndarray) -> np.ndarray:
    """
    Exact projection of one point by least-distance programming: min ||u|| s.t. A u <= c - A x0,
    reduced to a nonnegative least-squares problem (Lawson and Hanson).
    """
    n = x0.size
    g = normals @ x0 - offsets
    e = np.vstack([-normals.T, g[None, :]])
    f = np.zeros(n + 1)
    f[n] = 1.0
    w, _ = optimize.nnls(e, f)
    r = e @ w - f
    if not r[n] < -_DYKSTRA_TOL:
        raise ConvergenceError("least-distance step found no feasible point; polytope is empty")
    u = r[:n] / -r[n]
    x = x0 + u
    gap, violation = _kkt_gap(normals, offsets, x[None, :], (w / -r[n])[None, :])
    if gap[0] > _CERTIFICATE_TOL or violation[0] > _DYKSTRA_TOL:
        raise ConvergenceError(
            f"polytope projection not certified (gap {gap[0]:.2e}, violation {violation[0]:.2e})"
        )
    return x


def _dykstra(normals: np.ndarray, offsets: np.ndarray, X: np.ndarray) -> np.ndarray:
    """
    Dykstra's algorithm for the projection onto the intersection of half-spaces <a, x> <= c.
    The increments carry the multipliers, so each point stops on its own KKT gap; points still
    open after the cycle budget are finished by the exact least-distance step.
    """
    x = X.copy()
    increments = np.zeros((normals.shape[0],) + X.shape)
    open_ = np.ones(X.shape[0], dtype=bool)
    for cycle in range(1, _DYKSTRA_MAX_CYCLES + 1):
        idx = np.flatnonzero(open_)
        xi = x[idx]
        for i, (a, c) in enumerate(zip(normals, offsets)):
            y = xi + increments[i, idx]
            excess = np.maximum(y @ a - c, 0.0)
            xi = y - excess[:, None] * a
            increments[i, idx] = y - xi
        x[idx] = xi
        if cycle % _DYKSTRA_CHECK_EVERY:
            continue
        multipliers = np.einsum("kpn,kn->pk", increments[:, idx], normals)
        gap, violation = _kkt_gap(normals, offsets, xi, multipliers)
        open_[idx[(gap <= _DYKSTRA_TOL) & (violation <= _DYKSTRA_TOL)]] = False
        if not open_.any():
            logger.debug("dykstra converged after %d cycles", cycle)
            return x

    rest = np.flatnonzero(open_)
    logger.debug("dykstra budget spent; %d points finished by least-distance", rest.size)
    for j in rest:
        x[j] = _least_distance(normals, offsets, X[j])
    return x


@dataclass(frozen=True, eq=False)
class LinearImage(Body):
    """t(base) = {t x : x in base}; membership of y tests t^{-1} y in base."""
    transform: np.ndarray
    base: Body
    _lu: Any = field(init=False, repr=False)

    def __post_init__(self) -> None:
        t = np.array(self.transform, dtype=float)
        n = self.base.dimension
        if t.shape != (n, n):
            raise DimensionMismatchError(f"transform must be {n}x{n}, got shape {t.shape}")
        cond = np.linalg.cond(t)
        if not np.isfinite(cond) or cond > _MAX_CONDITION:
            raise SingularMatrixError(f"transform is singular or near-singular (cond {cond:.3e})")
        object.__setattr__(self, "transform", _readonly(t))
        object.__setattr__(self, "_lu", linalg.lu_factor(t))

    @property
    def dimension(self) -> int:
        return self.base.dimension

    @property
    def symmetric(self) -> bool:  # type: ignore[override]
        return self.base.symmetric

    def preimage(self, Y: np.ndarray) -> np.ndarray:
        return linalg.lu_solve(self._lu, Y.T).T

    def classify(self, X: np.ndarray) -> np.ndarray:
        return self.base.classify(self.preimage(X))

    def bounding_radius(self) -> float:
        return float(np.linalg.norm(self.transform, 2)) * self.base.bounding_radius()

    def max_norm(self) -> Tuple[float, bool]:
        if isinstance(self.base, Ball):
            return self.bounding_radius(), True
        if isinstance(self.base, Ellipsoid):
            inv = linalg.lu_solve(self._lu, np.eye(self.dimension))
            q = inv.T @ self.base.q @ inv
            return Ellipsoid((q + q.T) / 2).max_norm()
        faceted = as_polytope(self)
        if faceted is not None:
            return faceted.max_norm()
        return self.bounding_radius(), False


@dataclass(frozen=True, eq=False)
class Intersection(Body):
    left: Body
    right: Body

    def __post_init__(self) -> None:
        if self.left.dimension != self.right.dimension:
            raise DimensionMismatchError(
                f"cannot intersect bodies of dimension {self.left.dimension} and {self.right.dimension}"
            )

    @property
    def dimension(self) -> int:
        return self.left.dimension

    @property
    def symmetric(self) -> bool:  # type: ignore[override]
        return self.left.symmetric and self.right.symmetric

    def classify(self, X: np.ndarray) -> np.ndarray:
        out = self.left.classify(X)
        alive = out != NON_MEMBER
        if alive.any():
            out[alive] = conjunction(out[alive], self.right.classify(X[alive]))
        return out

    def bounding_radius(self) -> float:
        return min(self.left.bounding_radius(), self.right.bounding_radius())

    def max_norm(self) -> Tuple[float, bool]:
        faceted = as_polytope(self)
        if faceted is not None:
            return faceted.max_norm()
        return self.bounding_radius(), False


@dataclass(frozen=True, eq=False)
class Product(Body):
    """Cartesian product left x right in R^(m+n)."""
    left: Body
    right: Body

    @property
    def dimension(self) -> int:
        return self.left.dimension + self.right.dimension

    @property
    def symmetric(self) -> bool:  # type: ignore[override]
        return self.left.symmetric and self.right.symmetric

    def classify(self, X: np.ndarray) -> np.ndarray:
        m = self.left.dimension
        return conjunction(self.left.classify(X[:, :m]), self.right.classify(X[:, m:]))

    def bounding_radius(self) -> float:
        return math.hypot(self.left.bounding_radius(), self.right.bounding_radius())

    def max_norm(self) -> Tuple[float, bool]:
        left, left_exact = self.left.max_norm()
        right, right_exact = self.right.max_norm()
        return math.hypot(left, right), left_exact and right_exact


@dataclass(frozen=True, eq=False)
class TranslatedBody(Body):
    base: Body
    offset: np.ndarray

    def __post_init__(self) -> None:
        v = np.array(self.offset, dtype=float).reshape(-1)
        if v.size != self.base.dimension:
            raise DimensionMismatchError(
                f"offset has length {v.size}, body has dimension {self.base.dimension}"
            )
        object.__setattr__(self, "offset", _readonly(v))

    symmetric = False

    @property
    def dimension(self) -> int:
        return self.base.dimension

    def classify(self, X: np.ndarray) -> np.ndarray:
        return self.base.classify(X - self.offset)

    def bounding_radius(self) -> float:
        return self.base.bounding_radius() + float(np.linalg.norm(self.offset))


_PROJECTABLE = (Ball, Box, Ellipsoid, Polytope)


def _require_projectable(*bodies: Body) -> None:
    for body in bodies:
        if not isinstance(body, _PROJECTABLE):
            raise UnsupportedShapeError(
                f"projection onto {type(body).__name__} is not supported; "
                "Minkowski sums need Ball, Box, Ellipsoid or Polytope summands"
            )


@dataclass(frozen=True, eq=False)
class MinkowskiSum(Body):
    """A + B for projectable summands without a closed form; membership may be undecided."""
    left: Body
    right: Body
    tol: float = DEFAULT_MINKOWSKI_TOL
    max_iter: int = DEFAULT_MINKOWSKI_MAX_ITER

    def __post_init__(self) -> None:
        if self.left.dimension != self.right.dimension:
            raise DimensionMismatchError(
                f"cannot add bodies of dimension {self.left.dimension} and {self.right.dimension}"
            )
        _require_projectable(self.left, self.right)

    @property
    def dimension(self) -> int:
        return self.left.dimension

    def classify(self, X: np.ndarray) -> np.ndarray:
        out = np.full(X.shape[0], UNDECIDED, dtype=np.int8)
        # 0 lies in both summands, so each summand is contained in the sum
        out[(self.left.classify(X) == MEMBER) | (self.right.classify(X) == MEMBER)] = MEMBER
        reach = self.left.bounding_radius() + self.right.bounding_radius()
        if math.isfinite(reach):
            far = np.linalg.norm(X, axis=1) > reach * (1.0 + _BOUNDARY_RTOL)
            out[far & (out == UNDECIDED)] = NON_MEMBER

        pending = np.flatnonzero(out == UNDECIDED)
        if pending.size == 0:
            return out

        if isinstance(self.left, Ball) or isinstance(self.right, Ball):
            ball, other = (
                (self.left, self.right) if isinstance(self.left, Ball) else (self.right, self.left)
            )
            # A + rB = {x : dist(x, A) <= r}
            P = X[pending]
            dist = np.linalg.norm(P - other.project(P), axis=1)
            out[pending] = np.where(
                dist <= ball.radius,
                MEMBER,
                np.where(dist > ball.radius + 10 * self.tol, NON_MEMBER, UNDECIDED),
            )
        else:
            out[pending] = _alternating_classify(
                self.left, self.right, X[pending], self.tol, self.max_iter
            )
        return out

    def bounding_radius(self) -> float:
        return self.left.bounding_radius() + self.right.bounding_radius()


def _alternating_classify(
    a: Body, b: Body, X: np.ndarray, tol: float, max_iter: int
) -> np.ndarray:
    """
    Alternating projections between A x B and the affine set {(u, v) : u + v = x}, batched over
    the rows of X. Member once the residual ||u + v - x|| drops below tol; non-member once it
    stalls (relative change < tol/10 over a 50-iteration window) above 10 tol.
    """
    codes = np.full(X.shape[0], UNDECIDED, dtype=np.int8)
    try:
        U = a.project(X / 2)
        V = b.project(X / 2)
    except ConvergenceError as exc:
        logger.warning("minkowski points left undecided: %s", exc)
        return codes
    res = np.linalg.norm(X - U - V, axis=1)
    codes[res < tol] = MEMBER
    active = codes == UNDECIDED
    checkpoint = res.copy()

    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        x = X[idx]
        r = x - U[idx] - V[idx]
        try:
            U[idx] = a.project(U[idx] + r / 2)
            V[idx] = b.project(V[idx] + r / 2)
        except ConvergenceError as exc:
            logger.warning("minkowski points left undecided: %s", exc)
            break
        res_i = np.linalg.norm(x - U[idx] - V[idx], axis=1)
        hit = res_i < tol
        codes[idx[hit]] = MEMBER
        active[idx[hit]] = False

        if it % _STALL_WINDOW == 0:
            prev = checkpoint[idx]
            stalled = (
                ~hit
                & (np.abs(prev - res_i) < (tol / 10) * np.maximum(prev, np.finfo(float).tiny))
                & (res_i > 10 * tol)
            )
            codes[idx[stalled]] = NON_MEMBER
            active[idx[stalled]] = False
            checkpoint[idx] = res_i

    undecided = int(np.sum(codes == UNDECIDED))
    if undecided:
        logger.debug("alternating projections left %d of %d points undecided", undecided, len(codes))
    return codes


# -----------------------------
# Operations
# -----------------------------


def contains(body: Body, x: Any) -> Any:
    return body.contains(x)


def project(body: Body, x: Any) -> np.ndarray:
    return body.project(x)


def linear_image(t: Any, body: Body) -> LinearImage:
    return LinearImage(np.asarray(t, dtype=float), body)


def intersect(a: Body, b: Body) -> Intersection:
    return Intersection(a, b)


def translate(body: Body, v: Any) -> TranslatedBody:
    return TranslatedBody(body, np.asarray(v, dtype=float))


def product(a: Body, b: Body) -> Product:
    return Product(a, b)


def minkowski_member(
    a: Body,
    b: Body,
    x: Any,
    tol: float = DEFAULT_MINKOWSKI_TOL,
    max_iter: int = DEFAULT_MINKOWSKI_MAX_ITER,
) -> MinkowskiVerdict:
    """Decide x in A + B by alternating projections; never fails on non-convergence."""
    if a.dimension != b.dimension:
        raise DimensionMismatchError(
            f"cannot add bodies of dimension {a.dimension} and {b.dimension}"
        )
    if not tol > 0:
        raise DomainError(f"tol must be > 0, got {tol}")
    _require_projectable(a, b)
    X, _ = _as_points(np.asarray(x, dtype=float).reshape(-1), a.dimension)
    return _VERDICTS[int(_alternating_classify(a, b, X, tol, max_iter)[0])]


def as_polytope(body: Body) -> Optional[Polytope]:
    """
    The body as an explicit symmetric polytope when it is one: boxes, polytopes, their linear
    images and intersections. None otherwise.
    """
    if isinstance(body, Polytope):
        return body
    if isinstance(body, Box):
        return Polytope(np.eye(body.dimension), body.halfwidths)
    if isinstance(body, LinearImage):
        base = as_polytope(body.base)
        if base is None:
            return None
        # |<a, t^{-1} y>| <= c  <=>  |<t^{-T} a, y>| <= c
        normals = linalg.lu_solve(body._lu, base.normals.T, trans=1).T
        norms = np.linalg.norm(normals, axis=1)
        return Polytope(normals, base.offsets / norms)
    if isinstance(body, Intersection):
        left, right = as_polytope(body.left), as_polytope(body.right)
        if left is None or right is None:
            return None
        return Polytope(
            np.vstack([left.normals, right.normals]),
            np.concatenate([left.offsets, right.offsets]),
        )
    return None


def scaled(body: Body, c: float) -> Body:
    """c * body for a primitive shape and c > 0."""
    if not c > 0:
        raise DomainError(f"scale must be > 0, got {c}")
    if isinstance(body, Ball):
        return Ball(c * body.radius, body.dimension)
    if isinstance(body, Box):
        return Box(c * body.halfwidths)
    if isinstance(body, Ellipsoid):
        return Ellipsoid(body.q / c**2)
    if isinstance(body, Polytope):
        return Polytope(body.normals, c * body.offsets)
    raise UnsupportedShapeError(f"scaling {type(body).__name__} has no closed form")


def minkowski_sum(
    a: Body,
    b: Body,
    tol: float = DEFAULT_MINKOWSKI_TOL,
    max_iter: int = DEFAULT_MINKOWSKI_MAX_ITER,
) -> Body:
    """A + B as a closed-form body where one exists, else a MinkowskiSum node."""
    if a.dimension != b.dimension:
        raise DimensionMismatchError(
            f"cannot add bodies of dimension {a.dimension} and {b.dimension}"
        )
    if isinstance(a, Ball) and isinstance(b, Ball):
        return Ball(a.radius + b.radius, a.dimension)
    if isinstance(a, Box) and isinstance(b, Box):
        return Box(a.halfwidths + b.halfwidths)
    if a is b and isinstance(a, _PROJECTABLE):
        return scaled(a, 2.0)
    return MinkowskiSum(a, b, tol=tol, max_iter=max_iter)


def random_orthogonal(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def rotation(n: int, angle: float, i: int = 0, j: int = 1) -> np.ndarray:
    """Plane rotation by `angle` in coordinates (i, j)."""
    u = np.eye(n)
    c, s = math.cos(angle), math.sin(angle)
    u[i, i], u[i, j], u[j, i], u[j, j] = c, -s, s, c
    return u


def random_body(kind: str, n: int, scale: float = 1.0, seed: int = 0) -> Body:
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not scale > 0:
        raise DomainError(f"scale must be > 0, got {scale}")
    rng = np.random.default_rng(seed)

    if kind == "ball":
        return Ball(rng.uniform(0.5, 1.5) * scale, n)
    if kind == "box":
        return Box(rng.uniform(0.2, 1.0, size=n) * scale)
    if kind == "ellipsoid":
        g = rng.standard_normal((n, n))
        return Ellipsoid(g.T @ g / scale**2)
    if kind == "polytope":
        normals = rng.standard_normal((2 * n, n))
        offsets = rng.uniform(0.5, 1.5, size=2 * n) * scale
        return Polytope(normals, offsets)
    raise DomainError(f"unknown body kind {kind!r}; expected one of {BODY_KINDS}")
