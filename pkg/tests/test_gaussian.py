import math

import numpy as np
import pytest

from gcilab.convex_sets import (
    Ball,
    Box,
    Ellipsoid,
    Product,
    intersect,
    linear_image,
    random_orthogonal,
    rotation,
)
from gcilab.errors import DomainError
from gcilab.gaussian import (
    derive_seed,
    measure,
    measure_ball_exact,
    measure_box_exact,
    measure_mc,
    measure_quadrature,
    multiply_estimates,
    propagate_product,
    sign_orbit,
    simplify,
    wilson_interval,
)
from gcilab.models import Budget, Interval, MeasureEstimate, Source


def test_exact_ball_values():
    assert measure_ball_exact(math.sqrt(2 * math.log(2)), 2).value == pytest.approx(0.5, abs=1e-12)
    assert measure_ball_exact(1.0, 1).value == pytest.approx(0.682689492137, abs=1e-10)
    est = measure_ball_exact(2.0, 5)
    assert est.source is Source.EXACT
    assert est.ci_low == est.value == est.ci_high


def test_exact_box_value():
    assert measure_box_exact([1.0, 1.0]).value == pytest.approx(0.4660649427, abs=1e-9)
    with pytest.raises(DomainError):
        measure_box_exact([1.0, -1.0])


def test_wilson_interval():
    low, high = wilson_interval(50, 100, 0.95)
    assert low == pytest.approx(0.40383, abs=1e-4)
    assert high == pytest.approx(0.59617, abs=1e-4)
    assert wilson_interval(0, 100, 0.99)[0] == 0.0
    assert wilson_interval(100, 100, 0.99)[1] == 1.0
    with pytest.raises(DomainError):
        wilson_interval(5, 0, 0.99)


def test_sign_orbit_shapes():
    assert sign_orbit(3).shape == (2, 3)
    orbit = sign_orbit(3, blocks=(1, 2))
    assert orbit.shape == (4, 3)
    assert {tuple(row) for row in orbit} == {
        (1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, 1.0), (-1.0, -1.0, -1.0)
    }
    with pytest.raises(DomainError):
        sign_orbit(3, blocks=(1, 1))


def test_mc_is_deterministic_and_thread_invariant():
    body = Ellipsoid(np.diag([1.0, 0.5, 2.0]))
    one = measure_mc(body, 20_000, seed=7, confidence=0.99)
    again = measure_mc(body, 20_000, seed=7, confidence=0.99)
    threaded = measure_mc(body, 20_000, seed=7, confidence=0.99, workers=4)
    assert one == again == threaded
    assert one.source is Source.MONTE_CARLO
    assert one.samples == 20_000
    assert one.ci_low <= one.value <= one.ci_high


def test_mc_counts_whole_orbits():
    est = measure_mc(Ball(1.0, 2), 1001, seed=1, confidence=0.9)
    assert est.samples == 1002


def test_mc_close_to_exact():
    exact = measure_ball_exact(1.3, 3).value
    est = measure_mc(Ball(1.3, 3), 20_000, seed=3, confidence=0.99)
    assert abs(est.value - exact) < 0.02


def test_mc_interval_coverage():
    exact = measure_ball_exact(1.0, 2).value
    covered = 0
    for seed in range(200):
        est = measure_mc(Ball(1.0, 2), 2000, seed=seed, confidence=0.95)
        covered += est.ci_low <= exact <= est.ci_high
    assert covered >= 180


@pytest.mark.parametrize(
    "body, exact",
    [
        (Ball(1.2, 3), measure_ball_exact(1.2, 3).value),
        (Box(np.array([0.5, 1.0, 1.5])), measure_box_exact([0.5, 1.0, 1.5]).value),
    ],
    ids=["ball", "box"],
)
def test_mc_interval_coverage_in_three_dimensions(body, exact):
    confidence, seeds = 0.95, 200
    covered = 0
    for seed in range(seeds):
        est = measure_mc(body, 2000, seed=seed, confidence=confidence)
        covered += est.ci_low <= exact <= est.ci_high
    assert covered >= (confidence - 0.05) * seeds


def test_mc_rejects_tiny_budgets():
    with pytest.raises(DomainError):
        measure_mc(Ball(1.0, 2), 10, seed=0, confidence=0.99)


def test_quadrature_on_grid_aligned_box_is_exact():
    est = measure_quadrature(Box(np.array([1.0, 0.5])))
    assert est.source is Source.QUADRATURE
    assert est.value == pytest.approx(measure_box_exact([1.0, 0.5]).value, abs=1e-10)
    assert est.ci_low <= est.value <= est.ci_high


def test_quadrature_matches_ball():
    exact = measure_ball_exact(1.0, 2).value
    assert measure_quadrature(Ellipsoid(np.eye(2))).value == pytest.approx(exact, abs=2e-3)
    exact3 = measure_ball_exact(1.2, 3).value
    q = measure_quadrature(Ellipsoid(np.eye(3) / 1.44))
    assert q.value == pytest.approx(exact3, abs=5e-3)


def test_quadrature_rejects_bad_parameters():
    with pytest.raises(DomainError):
        measure_quadrature(Ellipsoid(np.eye(4)))
    with pytest.raises(DomainError):
        measure_quadrature(Ellipsoid(np.eye(2)), bounds=5.0)
    with pytest.raises(DomainError, match="even"):
        measure_quadrature(Ellipsoid(np.eye(2)), cells_per_axis=65)


def test_simplify_rewrites():
    ball = Ball(1.5, 3)
    assert simplify(linear_image(np.eye(3), ball)) is ball
    assert simplify(intersect(ball, ball)) is ball

    box = simplify(linear_image(np.diag([2.0, -3.0]), Box(np.array([1.0, 1.0]))))
    assert isinstance(box, Box) and list(box.halfwidths) == [2.0, 3.0]

    rotated = simplify(linear_image(2.0 * rotation(3, 0.7), ball))
    assert isinstance(rotated, Ball) and rotated.radius == pytest.approx(3.0)

    smaller = simplify(intersect(Ball(2.0, 2), Ball(1.0, 2)))
    assert isinstance(smaller, Ball) and smaller.radius == 1.0
    boxes = simplify(intersect(Box(np.array([1.0, 3.0])), Box(np.array([2.0, 2.0]))))
    assert list(boxes.halfwidths) == [1.0, 2.0]


def test_measure_dispatch():
    rotated = linear_image(rotation(3, 0.7), Ball(1.2, 3))
    est = measure(rotated)
    assert est.source is Source.EXACT
    assert est.value == measure_ball_exact(1.2, 3).value

    pair = measure(Product(Ball(1.0, 2), Box(np.array([0.5]))))
    assert pair.source is Source.EXACT
    expected = measure_ball_exact(1.0, 2).value * measure_box_exact([0.5]).value
    assert pair.value == pytest.approx(expected, rel=1e-12)

    e = Ellipsoid(np.diag([1.0, 2.0]))
    assert measure(e, Budget(samples=1000, method="quadrature")).source is Source.QUADRATURE
    assert measure(e, Budget(samples=1000)).source is Source.MONTE_CARLO
    big = Ellipsoid(np.eye(4))
    assert measure(big, Budget(samples=1000, method="quadrature")).source is Source.MONTE_CARLO


def test_product_of_estimates():
    a, b = MeasureEstimate.exact(0.5), MeasureEstimate.exact(0.4)
    assert multiply_estimates(a, b, seed=None) == MeasureEstimate.exact(0.2)
    mc = MeasureEstimate(0.5, 0.45, 0.55, Source.MONTE_CARLO, samples=100, seed=1)
    prod = multiply_estimates(mc, b, seed=1)
    assert prod.source is Source.MONTE_CARLO
    assert prod.ci_low == pytest.approx(0.18)
    assert prod.ci_high == pytest.approx(0.22)


def test_propagate_product():
    assert propagate_product([Interval.point(0.5), Interval.point(0.4)], scale=2.0).is_point

    tight = propagate_product([Interval(0.5, 0.49, 0.51), Interval(0.4, 0.39, 0.41)])
    assert tight.value == pytest.approx(0.2)
    assert tight.low == pytest.approx(0.2 * (1 - math.hypot(0.02, 0.025)))
    assert tight.high == pytest.approx(0.2 * (1 + math.hypot(0.02, 0.025)))

    loose = propagate_product([Interval(0.5, 0.3, 0.7), Interval(0.5, 0.4, 0.6)])
    assert loose.low == pytest.approx(0.12)
    assert loose.high == pytest.approx(0.42)


def test_derive_seed():
    assert derive_seed(42, 1) == derive_seed(42, 1)
    assert len({derive_seed(42, k) for k in range(50)}) == 50
    assert derive_seed(42, 0, 1) != derive_seed(42, 1, 0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_mc_measure_is_rotation_invariant(seed):
    box = Box(np.array([0.4, 0.9, 1.3]))
    turned = linear_image(random_orthogonal(3, seed), box)
    assert not isinstance(simplify(turned), Box)
    exact = measure_box_exact(box.halfwidths).value
    est = measure(turned, Budget(samples=40_000, seed=seed, confidence=0.999))
    assert est.source is Source.MONTE_CARLO
    assert est.ci_low <= exact <= est.ci_high

    ellipsoid = Ellipsoid(np.diag([1.0, 2.5, 0.6]))
    budget = Budget(samples=40_000, seed=seed)
    plain = measure(ellipsoid, budget)
    rotated = measure(linear_image(random_orthogonal(3, seed + 10), ellipsoid), budget)
    assert abs(plain.value - rotated.value) < 0.02
