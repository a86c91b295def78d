from __future__ import annotations

import logging
import math
from dataclasses import replace
from typing import Any, Callable, Dict

import numpy as np
from scipy import linalg

from .convex_sets import random_orthogonal
from .errors import DomainError, InvalidQuintupleError, SingularMatrixError
from .models import AnglePair, HypothesisReport, MatrixQuintuple

logger = logging.getLogger(__name__)

SQRT_HALF = math.sqrt(0.5)

VALIDATION_TOL = 1e-8
_SYMMETRY_TOL = 1e-10
_POLE_TOL = 1e-8
_PD_TOL = 1e-12
_COMMUTE_TOL = 1e-10


def _fro(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, "fro"))


def _square(a: Any, name: str = "matrix") -> np.ndarray:
    arr = np.atleast_2d(np.asarray(a, dtype=float))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DomainError(f"{name} must be square, got shape {arr.shape}")
    return arr


def _symmetric(a: Any, name: str = "matrix", tol: float = _SYMMETRY_TOL) -> np.ndarray:
    arr = _square(a, name)
    if np.max(np.abs(arr - arr.T), initial=0.0) > tol * max(1.0, float(np.max(np.abs(arr)))):
        raise DomainError(f"{name} must be symmetric")
    return (arr + arr.T) / 2


def _is_diagonal(a: np.ndarray) -> bool:
    return np.count_nonzero(a - np.diag(np.diag(a))) == 0


def _distance_to_pole_of_tan(w: np.ndarray) -> np.ndarray:
    k = np.round((w - math.pi / 2) / math.pi)
    return np.abs(w - (math.pi / 2 + k * math.pi))


_FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "inverse": lambda w: 1.0 / w,
    "sqrt": np.sqrt,
}


def matrix_function(a: Any, f: str) -> np.ndarray:
    """U f(L) U^T for symmetric a = U L U^T. Diagonal input is evaluated entrywise."""
    if f not in _FUNCTIONS:
        raise DomainError(f"unknown matrix function {f!r}; expected one of {sorted(_FUNCTIONS)}")
    a = _symmetric(a)

    if _is_diagonal(a):
        w = np.diag(a).copy()
        u = None
    else:
        w, u = linalg.eigh(a)

    if f == "inverse" and np.any(np.abs(w) < _POLE_TOL):
        raise DomainError("matrix is singular (eigenvalue within 1e-8 of 0)")
    if f == "tan" and np.any(_distance_to_pole_of_tan(w) < _POLE_TOL):
        raise DomainError("tan has a pole at an eigenvalue (within 1e-8 of pi/2 + k pi)")
    if f == "sqrt":
        if np.any(w < -_POLE_TOL):
            raise DomainError(f"sqrt needs a positive semidefinite matrix, min eigenvalue {w.min():.3e}")
        w = np.clip(w, 0.0, None)

    fw = _FUNCTIONS[f](w)
    if u is None:
        return np.diag(fw)
    out = (u * fw) @ u.T
    return (out + out.T) / 2


def symmetric_psd_sqrt(a: Any) -> np.ndarray:
    a = _symmetric(a)
    if _is_diagonal(a):
        d = np.diag(a)
        if np.any(d <= _PD_TOL):
            raise DomainError(f"matrix must be positive definite, min eigenvalue {d.min():.3e}")
        return np.diag(np.sqrt(d))
    w, u = linalg.eigh(a)
    if w[0] <= _PD_TOL:
        raise DomainError(f"matrix must be positive definite, min eigenvalue {w[0]:.3e}")
    out = (u * np.sqrt(w)) @ u.T
    return (out + out.T) / 2


# -----------------------------
# Block identities
# -----------------------------


def _rect(m: Any) -> np.ndarray:
    arr = np.atleast_2d(np.asarray(m, dtype=float))
    if arr.ndim != 2:
        raise DomainError(f"m must be a matrix, got shape {arr.shape}")
    return arr


def _gram_complement(m: np.ndarray) -> np.ndarray:
    """I - M^T M, checked positive definite."""
    g = np.eye(m.shape[1]) - m.T @ m
    lo = float(linalg.eigvalsh(g)[0])
    if lo <= 0:
        raise DomainError(f"I - M^T M must be positive definite, min eigenvalue {lo:.3e}")
    return g


def block_matrix(m: Any, sign: float = 1.0) -> np.ndarray:
    """[[I, sign M], [sign M^T, I]]."""
    m = _rect(m)
    p, q = m.shape
    return np.block([[np.eye(p), sign * m], [sign * m.T, np.eye(q)]])


def block_sqrt(m: Any) -> np.ndarray:
    return symmetric_psd_sqrt(block_matrix(m))


def det_factor(m: Any) -> float:
    """det(I - M^T M)^{1/2}."""
    return math.sqrt(float(np.linalg.det(_gram_complement(_rect(m)))))


def det_block_identity(m: Any) -> float:
    m = _rect(m)
    d_small = float(np.linalg.det(_gram_complement(m)))
    d_block = float(np.linalg.det(block_matrix(m)))
    return abs(d_block - d_small) / abs(d_small)


def shao_block_inverse(m: Any) -> float:
    m = _rect(m)
    p, q = m.shape
    inner = np.linalg.inv(_gram_complement(m))
    outer = np.linalg.inv(np.eye(p) - m @ m.T)
    assembled = np.block([[outer, m @ inner], [m.T @ outer, inner]])
    return _fro(assembled - np.linalg.inv(block_matrix(m, sign=-1.0)))


# -----------------------------
# Quintuples
# -----------------------------


def check_hypotheses(q: MatrixQuintuple, tol: float = VALIDATION_TOL) -> HypothesisReport:
    """
    Residuals of the three matrix equations and of the equivalent block form
    F F^T = [[I, -M], [-M^T, I]]^{-1} with F = [[P, PS], [R, -RT]].
    """
    n = q.n
    eye = np.eye(n)
    block_min = float(linalg.eigvalsh(block_matrix(q.m))[0])
    if block_min < _PD_TOL:
        raise SingularMatrixError(f"[[I, M], [M^T, I]] is singular (min eigenvalue {block_min:.3e})")

    left_inv = np.linalg.inv(eye - q.m @ q.m.T)
    right_inv = np.linalg.inv(eye - q.m.T @ q.m)

    eq1 = _fro(q.p @ (eye + q.s @ q.s.T) @ q.p.T - left_inv)
    eq2 = _fro(q.p @ (eye - q.s @ q.t.T) @ q.r.T - q.m @ right_inv)
    eq3 = _fro(q.r @ (eye + q.t @ q.t.T) @ q.r.T - right_inv)

    f = np.block([[q.p, q.p @ q.s], [q.r, -q.r @ q.t]])
    block = _fro(f @ f.T - np.linalg.inv(block_matrix(q.m, sign=-1.0)))

    min_eig = float(linalg.eigvalsh(eye - q.m.T @ q.m)[0])
    validated = max(eq1, eq2, eq3, block) <= tol and min_eig > 0
    return HypothesisReport(
        eq1=eq1, eq2=eq2, eq3=eq3, block=block, min_eig=min_eig, tol=tol, validated=validated
    )


def validated(q: MatrixQuintuple, tol: float = VALIDATION_TOL) -> MatrixQuintuple:
    report = check_hypotheses(q, tol)
    if not report.validated:
        raise InvalidQuintupleError(
            f"quintuple fails the hypotheses (max residual {report.max_residual:.3e}, "
            f"min eigenvalue of I - M^T M {report.min_eig:.3e}, tol {tol:.1e})"
        )
    return replace(q, validated=True)


def li_quintuple(p: float, r: float, n: int) -> MatrixQuintuple:
    """M = 0, P = pI, R = rI, S = (r/p)I, T = (p/r)I for p^2 + r^2 = 1."""
    if not (p > 0 and r > 0):
        raise DomainError(f"p and r must be > 0, got p={p}, r={r}")
    if abs(p * p + r * r - 1.0) > 1e-12:
        raise DomainError(f"p^2 + r^2 must equal 1, got {p * p + r * r!r}")
    eye = np.eye(n)
    return validated(MatrixQuintuple(0.0 * eye, p * eye, r * eye, (r / p) * eye, (p / r) * eye))


def ssz_quintuple(n: int) -> MatrixQuintuple:
    return li_quintuple(SQRT_HALF, SQRT_HALF, n)


def corollary1_quintuple(n: int) -> MatrixQuintuple:
    eye = np.eye(n)
    third = 1.0 / math.sqrt(3.0)
    return validated(MatrixQuintuple(0.5 * eye, eye, eye, third * eye, third * eye))


# -----------------------------
# Angle family
# -----------------------------


def validate_angle_pair(angles: AnglePair) -> None:
    for name in ("alpha", "beta"):
        a = getattr(angles, name)
        if np.max(np.abs(a - a.T), initial=0.0) > 1e-12:
            raise DomainError(f"{name} must be symmetric")
        w = linalg.eigvalsh(a)
        if w[0] <= 0 or w[-1] >= math.pi / 2:
            raise DomainError(f"{name} eigenvalues must lie in (0, pi/2), got [{w[0]:.4f}, {w[-1]:.4f}]")
    commutator = _fro(angles.alpha @ angles.beta - angles.beta @ angles.alpha)
    if commutator > _COMMUTE_TOL:
        raise DomainError(f"alpha and beta must commute, commutator norm {commutator:.3e}")
    w = linalg.eigvalsh((angles.alpha + angles.beta + (angles.alpha + angles.beta).T) / 2)
    if np.min(np.abs(np.sin(w))) < _POLE_TOL:
        raise DomainError("sin(alpha + beta) is singular")


def random_angle_pair(
    n: int, seed: int, low: float = 0.1, high: float = math.pi / 2 - 0.1
) -> AnglePair:
    """Commuting pair sharing a random eigenbasis, eigenvalues uniform in (low, high)."""
    if not (0 < low < high < math.pi / 2):
        raise DomainError(f"need 0 < low < high < pi/2, got ({low}, {high})")
    rng = np.random.default_rng(seed)
    u = random_orthogonal(n, int(rng.integers(0, 2**32)))
    a = rng.uniform(low, high, size=n)
    b = rng.uniform(low, high, size=n)

    def assemble(w: np.ndarray) -> np.ndarray:
        x = (u * w) @ u.T
        return (x + x.T) / 2

    return AnglePair(assemble(a), assemble(b), u)


def build_from_angles(angles: AnglePair) -> MatrixQuintuple:
    """(cos(a+b), cos a sin(a+b)^-1, cos b sin(a+b)^-1, tan a, tan b), validated."""
    validate_angle_pair(angles)
    total = angles.alpha + angles.beta
    inv_sin = matrix_function(matrix_function(total, "sin"), "inverse")
    q = MatrixQuintuple(
        m=matrix_function(total, "cos"),
        p=matrix_function(angles.alpha, "cos") @ inv_sin,
        r=matrix_function(angles.beta, "cos") @ inv_sin,
        s=matrix_function(angles.alpha, "tan"),
        t=matrix_function(angles.beta, "tan"),
    )
    logger.debug("built quintuple n=%d", q.n)
    return validated(q)


def _max_abs_diff(a: MatrixQuintuple, b: MatrixQuintuple) -> float:
    return max(
        float(np.max(np.abs(getattr(a, k) - getattr(b, k)))) for k in ("m", "p", "r", "s", "t")
    )


def corollary1_angle_check(n: int = 1) -> Dict[str, Any]:
    """
    Compare the angle family at alpha = beta = pi/6 and pi/3 with the (4/3)^{n/2} parameters
    (M = I/2, P = R = I, S = T = I/sqrt 3). Only pi/6 reproduces them; pi/3 gives M = -I/2.
    """
    target = corollary1_quintuple(n)
    eye = np.eye(n)
    out: Dict[str, Any] = {}
    for label, angle in (("pi_over_6", math.pi / 6), ("pi_over_3", math.pi / 3)):
        q = build_from_angles(AnglePair(angle * eye, angle * eye))
        diff = _max_abs_diff(q, target)
        out[label] = {
            "m": float(q.m[0, 0]),
            "p": float(q.p[0, 0]),
            "s": float(q.s[0, 0]),
            "max_abs_diff": diff,
            "matches": diff <= 1e-10,
        }
    return out
