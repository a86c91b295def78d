import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcilab.convex_sets import (
    BODY_KINDS,
    _least_distance,
    Ball,
    Box,
    Ellipsoid,
    Polytope,
    Product,
    contains,
    intersect,
    linear_image,
    project,
    random_body,
    random_orthogonal,
    rotation,
    translate,
)
from gcilab.errors import (
    DimensionMismatchError,
    DomainError,
    SingularMatrixError,
    UnsupportedShapeError,
)

bodies = st.builds(
    random_body,
    kind=st.sampled_from(BODY_KINDS),
    n=st.integers(min_value=1, max_value=5),
    scale=st.floats(min_value=0.3, max_value=3.0),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)


def _sample_points(n: int, k: int = 1000, seed: int = 0, spread: float = 1.5) -> np.ndarray:
    return np.random.default_rng(seed).normal(scale=spread, size=(k, n))


def test_ball_membership():
    ball = Ball(1.0, 3)
    assert contains(ball, np.zeros(3))
    assert not contains(ball, np.array([1.0001, 0.0, 0.0]))


def test_ellipsoid_boundary_is_member():
    assert contains(Ellipsoid(np.diag([1.0, 4.0])), np.array([0.0, 0.5]))


def test_contains_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        contains(Ball(1.0, 2), np.zeros(3))


def test_batched_contains_matches_single():
    body = random_body("polytope", 3, seed=7)
    X = _sample_points(3, 50)
    batch = body.contains(X)
    assert batch.dtype == bool
    assert list(batch) == [body.contains(x) for x in X]


def test_projection_examples():
    assert project(Ball(2.0, 2), np.array([6.0, 0.0])) == pytest.approx([2.0, 0.0])
    assert project(Box(np.array([1.0, 1.0])), np.array([3.0, 0.5])) == pytest.approx([1.0, 0.5])
    p = project(Ellipsoid(np.eye(2)), np.array([0.0, 5.0]))
    assert p == pytest.approx([0.0, 1.0], abs=1e-9)


def test_projection_of_composite_is_unsupported():
    body = linear_image(2 * np.eye(2), Ball(1.0, 2))
    with pytest.raises(UnsupportedShapeError):
        project(body, np.array([3.0, 0.0]))


def test_invalid_shapes_rejected():
    with pytest.raises(DomainError):
        Ball(-1.0, 2)
    with pytest.raises(DomainError):
        Box(np.array([1.0, 0.0]))
    with pytest.raises(DomainError):
        Ellipsoid(np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(DomainError):
        Polytope(np.array([[1.0, 0.0]]), np.array([-0.5]))


def test_polytope_stores_unit_normals():
    poly = Polytope.from_halfspaces([([3.0, 4.0], 1.0), ([0.0, 2.0], 0.5)])
    assert np.linalg.norm(poly.normals, axis=1) == pytest.approx([1.0, 1.0])
    assert len(poly.halfspaces) == 2
    assert poly.contains(np.array([0.0, 0.5]))
    assert not poly.contains(np.array([0.0, -0.51]))


def test_linear_image_examples():
    n = 4
    ball = Ball(1.0, n)
    X = _sample_points(n, 1000, seed=1)
    same = linear_image(np.eye(n), ball)
    assert np.array_equal(same.contains(X), ball.contains(X))

    doubled = linear_image(2 * np.eye(n), ball)
    e1 = np.eye(n)[0]
    assert doubled.contains(1.5 * e1)
    assert not doubled.contains(2.5 * e1)

    rotated = linear_image(rotation(2, math.pi / 4), Box(np.array([1.0, 1.0])))
    assert rotated.contains(np.array([math.sqrt(2) - 0.01, 0.0]))
    assert not rotated.contains(np.array([math.sqrt(2) + 0.01, 0.0]))


def test_linear_image_rejects_singular():
    with pytest.raises(SingularMatrixError):
        linear_image(np.array([[1.0, 2.0], [2.0, 4.0]]), Ball(1.0, 2))
    with pytest.raises(DimensionMismatchError):
        linear_image(np.eye(3), Ball(1.0, 2))


def test_intersection_examples():
    ball = Ball(1.0, 2)
    X = _sample_points(2, 1000, seed=2)
    assert np.array_equal(intersect(ball, ball).contains(X), ball.contains(X))
    assert not intersect(ball, Box(np.array([0.5, 0.5]))).contains(np.array([0.6, 0.0]))

    a, b = random_body("ellipsoid", 2, seed=3), random_body("polytope", 2, seed=4)
    assert np.array_equal(intersect(a, b).contains(X), intersect(b, a).contains(X))
    with pytest.raises(DimensionMismatchError):
        intersect(Ball(1.0, 2), Ball(1.0, 3))


def test_translate_examples():
    ball = Ball(1.0, 2)
    X = _sample_points(2, 1000, seed=5)
    v = np.array([3.0, 0.0])
    assert translate(ball, v).contains(v)
    assert np.array_equal(translate(ball, np.zeros(2)).contains(X), ball.contains(X))
    back = translate(translate(ball, v), -v)
    assert np.array_equal(back.contains(X), ball.contains(X))
    assert not translate(ball, v).symmetric


def test_random_body_is_deterministic():
    for kind in BODY_KINDS:
        X = _sample_points(3, 500, seed=6)
        a = random_body(kind, 3, scale=1.2, seed=11)
        b = random_body(kind, 3, scale=1.2, seed=11)
        assert np.array_equal(a.contains(X), b.contains(X))


def test_random_body_unknown_kind():
    with pytest.raises(DomainError):
        random_body("simplex", 2)


def test_random_orthogonal_is_orthogonal():
    u = random_orthogonal(5, seed=3)
    assert u.T @ u == pytest.approx(np.eye(5), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(body=bodies, seed=st.integers(min_value=0, max_value=10_000))
def test_bodies_are_centrally_symmetric(body, seed):
    X = _sample_points(body.dimension, 1000, seed=seed)
    assert body.contains(np.zeros(body.dimension))
    assert np.array_equal(body.contains(X), body.contains(-X))


@settings(max_examples=40, deadline=None)
@given(body=bodies, seed=st.integers(min_value=0, max_value=10_000))
def test_bodies_are_midpoint_convex(body, seed):
    X = _sample_points(body.dimension, 1000, seed=seed, spread=0.7)
    members = X[body.contains(X)]
    if len(members) < 2:
        return
    half = len(members) // 2
    mids = (members[:half] + members[half:2 * half]) / 2
    assert body.contains(mids).all()


def _conditioned(kind: str, n: int, seed: int):
    if kind != "ellipsoid":
        return random_body(kind, n, seed=seed)
    rng = np.random.default_rng(seed)
    u = random_orthogonal(n, seed)
    return Ellipsoid((u * rng.uniform(0.3, 3.0, size=n)) @ u.T)


@settings(max_examples=30, deadline=None)
@given(
    kind=st.sampled_from(("ball", "box", "ellipsoid")),
    n=st.integers(min_value=1, max_value=4),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_projection_idempotent_and_optimal(kind, n, seed):
    body = _conditioned(kind, n, seed)
    X = _sample_points(n, 100, seed=seed % 1000, spread=3.0)
    P = body.project(X)
    assert body.contains(P * (1 - 1e-9)).all()
    assert np.allclose(body.project(P), P, atol=1e-9)

    Q = _sample_points(n, 2000, seed=seed % 1000 + 1, spread=0.8)
    Q = Q[body.contains(Q)][:100]
    for x, p in zip(X, P):
        assert np.max((Q - p) @ (x - p), initial=0.0) <= 1e-8


def test_members_project_to_themselves():
    for kind in BODY_KINDS:
        body = random_body(kind, 3, seed=21)
        X = _sample_points(3, 500, seed=22, spread=0.5)
        inside = X[body.contains(X)]
        assert np.array_equal(body.project(inside), inside)


def _certificate(X: np.ndarray, P: np.ndarray, members: np.ndarray) -> float:
    return max(float(np.max((members - p) @ (x - p), initial=0.0)) for x, p in zip(X, P))


def test_polytope_projection_certificate():
    body = random_body("polytope", 2, seed=8)
    X = _sample_points(2, 100, seed=9, spread=3.0)
    P = body.project(X)
    assert np.allclose(body.project(P), P, atol=1e-9)
    Q = _sample_points(2, 3000, seed=10, spread=0.8)
    assert _certificate(X, P, Q[body.contains(Q)][:100]) <= 1e-8


@pytest.mark.parametrize("seed", range(40))
def test_polytope_projection_is_certified_in_3d(seed):
    body = random_body("polytope", 3, seed=seed)
    X = _sample_points(3, 100, seed=seed + 1000, spread=3.0)
    P = body.project(X)
    assert body.contains(P * (1 - 1e-9)).all()
    Q = _sample_points(3, 4000, seed=seed + 2000, spread=0.8)
    assert _certificate(X, P, Q[body.contains(Q)][:100]) <= 1e-8
    assert np.allclose(body.project(P), P, atol=1e-9)


def test_least_distance_step_matches_projection():
    body = random_body("polytope", 4, seed=3)
    a = np.vstack([body.normals, -body.normals])
    c = np.concatenate([body.offsets, body.offsets])
    X = _sample_points(4, 20, seed=4, spread=3.0)
    X = X[~body.contains(X)]
    assert len(X)
    exact = np.array([_least_distance(a, c, x) for x in X])
    assert np.allclose(body.project(X), exact, atol=2e-5)
    assert body.contains(exact * (1 - 1e-9)).all()


def test_max_norm_of_polytopes_is_exact():
    norm, exact = Polytope(np.eye(2), np.array([0.3, 0.4])).max_norm()
    assert exact and norm == pytest.approx(0.5)
    slab = Polytope(np.array([[1.0, 0.0]]), np.array([1.0]))
    assert slab.max_norm() == (math.inf, True)
    norm, exact = Polytope(np.array([[2.0]]), np.array([0.7])).max_norm()
    assert exact and norm == pytest.approx(0.7)

    # the diagonal cut removes (1, 1) and (-1, -1) but keeps (1, -1)
    cut = intersect(Box(np.array([1.0, 1.0])), Polytope(np.array([[1.0, 1.0]]), np.array([0.5])))
    norm, exact = cut.max_norm()
    assert exact and norm == pytest.approx(math.sqrt(2))

    turned = linear_image(rotation(3, 0.7), Box(np.array([0.2, 0.3, 0.6])))
    norm, exact = turned.max_norm()
    assert exact and norm == pytest.approx(0.7)


def test_max_norm_of_polytope_vertices_beats_extent_box():
    # cross-polytope: extent 1 on every axis, so the box bound is sqrt(3) and the true max is 1
    signs = np.array([[s1, s2, 1.0] for s1 in (1, -1) for s2 in (1, -1)])
    octahedron = Polytope(signs, np.full(4, 1 / math.sqrt(3)))
    norm, exact = octahedron.max_norm()
    assert exact and norm == pytest.approx(1.0)
    assert octahedron.bounding_radius() == pytest.approx(1.0)


def test_max_norm_of_curved_and_composite_bodies():
    e = Ellipsoid(np.diag([4.0, 1.0]))
    norm, exact = e.max_norm()
    assert exact and norm == pytest.approx(1.0)
    stretched = linear_image(np.diag([3.0, 1.0]), e)
    norm, exact = stretched.max_norm()
    assert exact and norm == pytest.approx(1.5)
    pair = Product(Ball(1.0, 2), Box(np.array([0.3, 0.4])))
    norm, exact = pair.max_norm()
    assert exact and norm == pytest.approx(math.hypot(1.0, 0.5))
    lens = intersect(Ball(1.0, 2), Ellipsoid(np.diag([4.0, 1.0])))
    assert lens.max_norm() == (1.0, False)
    assert translate(Ball(1.0, 2), [1.0, 0.0]).max_norm()[1] is False
