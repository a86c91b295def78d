import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import linalg

from gcilab.errors import DomainError, InvalidQuintupleError, SingularMatrixError
from gcilab.matrix_lab import (
    SQRT_HALF,
    block_sqrt,
    build_from_angles,
    check_hypotheses,
    corollary1_angle_check,
    corollary1_quintuple,
    det_block_identity,
    det_factor,
    li_quintuple,
    matrix_function,
    random_angle_pair,
    shao_block_inverse,
    ssz_quintuple,
    symmetric_psd_sqrt,
    validate_angle_pair,
    validated,
)
from gcilab.models import AnglePair, MatrixQuintuple


def _sym(n: int, seed: int) -> np.ndarray:
    g = np.random.default_rng(seed).standard_normal((n, n))
    return (g + g.T) / 8


def test_matrix_functions_on_diagonal():
    a = np.diag([0.3, 0.7])
    assert np.diag(matrix_function(a, "sin")) == pytest.approx(np.sin([0.3, 0.7]))
    assert np.diag(matrix_function(a, "inverse")) == pytest.approx([1 / 0.3, 1 / 0.7])


def test_matrix_functions_match_scipy():
    a = _sym(4, 0)
    assert matrix_function(a, "sin") == pytest.approx(linalg.sinm(a), abs=1e-10)
    assert matrix_function(a, "cos") == pytest.approx(linalg.cosm(a), abs=1e-10)
    assert matrix_function(a, "tan") == pytest.approx(linalg.tanm(a), abs=1e-10)
    inv = matrix_function(a, "inverse")
    assert inv @ a == pytest.approx(np.eye(4), abs=1e-8)


def test_matrix_function_domain_errors():
    with pytest.raises(DomainError):
        matrix_function(np.diag([math.pi / 2, 0.1]), "tan")
    with pytest.raises(DomainError):
        matrix_function(np.diag([0.0, 1.0]), "inverse")
    with pytest.raises(DomainError):
        matrix_function(np.array([[1.0, 2.0], [0.0, 1.0]]), "sin")
    with pytest.raises(DomainError):
        matrix_function(np.eye(2), "exp")
    with pytest.raises(DomainError):
        matrix_function(-np.eye(2), "sqrt")


def test_psd_sqrt():
    g = np.random.default_rng(1).standard_normal((3, 3))
    a = g @ g.T + 0.1 * np.eye(3)
    root = symmetric_psd_sqrt(a)
    assert root @ root == pytest.approx(a, abs=1e-10)
    assert root == pytest.approx(root.T)
    assert symmetric_psd_sqrt(np.diag([4.0, 9.0])) == pytest.approx(np.diag([2.0, 3.0]))
    with pytest.raises(DomainError):
        symmetric_psd_sqrt(np.diag([1.0, 0.0]))


def test_block_identities():
    rng = np.random.default_rng(2)
    for shape in ((1, 1), (2, 3), (3, 2)):
        g = rng.standard_normal(shape)
        m = 0.6 * g / np.linalg.norm(g, 2)
        assert det_block_identity(m) < 1e-10
        assert shao_block_inverse(m) < 1e-10
        root = block_sqrt(m)
        assert root @ root == pytest.approx(
            np.block([[np.eye(shape[0]), m], [m.T, np.eye(shape[1])]]), abs=1e-10
        )
    assert det_factor(np.zeros((2, 2))) == 1.0
    assert det_factor(np.array([[0.6]])) == pytest.approx(0.8)
    with pytest.raises(DomainError):
        det_factor(np.array([[1.0]]))


def test_block_identities_near_the_unit_ball():
    rng = np.random.default_rng(12)
    shapes = set()
    for _ in range(100):
        shape = (int(rng.integers(1, 9)), int(rng.integers(1, 9)))
        shapes.add(shape)
        g = rng.standard_normal(shape)
        m = 0.95 * g / np.linalg.norm(g, 2)
        assert np.linalg.norm(m, 2) == pytest.approx(0.95)
        assert det_block_identity(m) < 1e-10
        assert shao_block_inverse(m) < 1e-9
    assert any(p != q for p, q in shapes)
    assert max(max(s) for s in shapes) == 8


def test_named_quintuples_satisfy_hypotheses():
    for q in (ssz_quintuple(3), li_quintuple(0.6, 0.8, 2), corollary1_quintuple(4)):
        report = check_hypotheses(q)
        assert report.validated
        assert report.max_residual < 1e-12
        assert q.validated


def test_ssz_is_li_at_equal_weights():
    a, b = ssz_quintuple(2), li_quintuple(SQRT_HALF, SQRT_HALF, 2)
    for name in ("m", "p", "r", "s", "t"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_li_rejects_off_circle_weights():
    with pytest.raises(DomainError):
        li_quintuple(0.6, 0.6, 2)
    with pytest.raises(DomainError):
        li_quintuple(-0.6, 0.8, 2)


def test_perturbed_quintuple_fails():
    q = ssz_quintuple(2)
    bad = MatrixQuintuple(q.m, q.p + 1e-3 * np.eye(2), q.r, q.s, q.t)
    report = check_hypotheses(bad)
    assert not report.validated
    assert report.eq1 > 1e-4
    with pytest.raises(InvalidQuintupleError):
        validated(bad)


def test_singular_block_raises():
    eye = np.eye(2)
    with pytest.raises(SingularMatrixError):
        check_hypotheses(MatrixQuintuple(eye, eye, eye, eye, eye))


@settings(max_examples=25, deadline=None)
@given(n=st.integers(min_value=1, max_value=5), seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_angle_family_satisfies_hypotheses(n, seed):
    pair = random_angle_pair(n, seed)
    q = build_from_angles(pair)
    report = check_hypotheses(q)
    assert report.validated
    assert report.max_residual < 1e-8
    assert report.min_eig > 0


def test_random_angle_pair_is_reproducible():
    a, b = random_angle_pair(3, 9), random_angle_pair(3, 9)
    assert np.array_equal(a.alpha, b.alpha) and np.array_equal(a.beta, b.beta)
    assert np.linalg.norm(a.alpha @ a.beta - a.beta @ a.alpha) < 1e-10
    w = np.linalg.eigvalsh(a.alpha)
    assert 0.1 <= w[0] and w[-1] <= math.pi / 2 - 0.1


def test_validate_angle_pair_rejects_bad_input():
    with pytest.raises(DomainError):
        validate_angle_pair(AnglePair(np.diag([0.2, 1.0]), np.array([[0.5, 0.2], [0.2, 0.5]])))
    with pytest.raises(DomainError):
        validate_angle_pair(AnglePair(np.diag([0.2, 1.7]), np.diag([0.3, 0.3])))


def test_corollary1_angle_check():
    result = corollary1_angle_check(2)
    assert result["pi_over_6"]["matches"]
    assert result["pi_over_6"]["m"] == pytest.approx(0.5)
    assert result["pi_over_6"]["s"] == pytest.approx(1 / math.sqrt(3))
    assert not result["pi_over_3"]["matches"]
    assert result["pi_over_3"]["m"] == pytest.approx(-0.5)
