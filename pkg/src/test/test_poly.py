import pytest
import sys
import os

import numpy as np

myPath = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(myPath, '../lamespectra'))

from src.lamespectra.errors import EmptyPointSetError, ZeroPolynomialError
from src.lamespectra.linalg import companion, eigenvalues
from src.lamespectra.poly import (
    Poly,
    add,
    backward_error,
    cauchy_radius,
    cluster_points,
    convex_hull,
    derivative,
    dist_to_hull,
    monic,
    mul,
    roots,
    scale,
)
from src.lamespectra.spectral import matching_distance


@pytest.fixture
def cubic():
    # z^3 + 2z^2 - 8
    return Poly([-8, 0, 2, 1])


def test_eval(cubic):
    assert abs(Poly([1, 0, 1]).eval(1j)) == 0
    assert Poly().eval(5) == 0
    assert cubic.eval(1) == -5


def test_eval_array(cubic):
    z = np.array([0.0, 1.0, 2.0])
    assert np.allclose(cubic(z), [-8, -5, 8])


def test_derivative():
    assert derivative(Poly.monomial(3)) == Poly([0, 0, 3])
    assert derivative(Poly([7])).is_zero()
    assert derivative(Poly()).is_zero()


def test_derivative_product_rule():
    p = Poly([1, 0, 1])
    q = Poly([-2, 1])
    expected = p.derivative() * q + p * q.derivative()
    assert derivative(mul(p, q)).allclose(expected)


def test_arithmetic():
    assert monic(Poly([4, 2])) == Poly([2, 1])
    assert mul(Poly([-1, 1]), Poly([1, 1])) == Poly([-1, 0, 1])
    p = Poly([1.5, -2j, 3.0])
    assert add(p, scale(p, -1)).is_zero()
    assert add(p, scale(p, -1)).degree() == -1


def test_cancellation_trims_leading_terms():
    p = Poly([1.0, 1e-3, 1.0 + 1e-15])
    q = Poly([0.0, 0.0, -1.0])
    assert (p + q).degree() == 1


def test_products_and_scalings_trim():
    wide = Poly([1e8, 1]) * Poly([1e8, 1])
    assert wide.degree() == 2
    assert wide.leading == 1
    assert scale(Poly([1, 2, 3]), 0).is_zero()
    assert (Poly([1, 2]) * 0.0).is_zero()
    cancelled = Poly([1.0, 1e-3, 1.0 + 1e-15]) + Poly([0.0, 0.0, -1.0])
    assert (cancelled * Poly([1, 1])).degree() == 2


def test_compose_affine():
    # 1 + 2(1 + 2x) + 3(1 + 2x)^2
    assert Poly([1, 2, 3]).compose_affine(1, 2).allclose(Poly([6, 16, 12]))
    p = Poly.from_roots([0.3, 2 - 1j, -1])
    q = p.compose_affine(0.5 - 1j, 2.0)
    assert np.allclose(np.sort_complex(q.roots()), np.sort_complex((p.roots() - (0.5 - 1j)) / 2.0))
    assert Poly().compose_affine(1, 2).is_zero()


def test_monic_zero_raises():
    with pytest.raises(ZeroPolynomialError):
        monic(Poly())


def test_json():
    p = Poly.from_json({'re': [1.0, 0.0, 2.0]})
    assert p == Poly([1, 0, 2])
    assert Poly.from_json(p.to_json()) == p
    with pytest.raises(ValueError):
        Poly.from_json({'re': [1.0, 2.0], 'im': [0.0]})


def test_cauchy_radius():
    assert cauchy_radius(Poly([-4, 0, 1])) == pytest.approx(2.0, rel=1e-10)
    assert cauchy_radius(Poly.monomial(5)) == 0.0


def test_roots_conjugate_pair():
    z = sorted(roots(Poly([1, 0, 1])), key=lambda x: x.imag)
    assert np.allclose(z, [-1j, 1j], atol=1e-12)


def test_roots_multiple():
    z = roots(Poly.from_roots([1, 1, 1]))
    assert np.max(np.abs(z - 1)) < 1e-4
    assert len(cluster_points(z)) == 1
    assert cluster_points(z)[0][1] == 3


def test_roots_exact_zeros():
    z = roots(Poly([0, 0, -1, 1]))
    assert np.allclose(np.sort_complex(z), [0, 0, 1])


def test_roots_match_companion_eigenvalues(cubic):
    z = roots(cubic)
    eig = eigenvalues(companion(cubic.coeffs))
    assert matching_distance(z, eig) <= 1e-8


def test_roots_backward_error():
    rng = np.random.default_rng(3)
    p = Poly(rng.normal(size=21) + 1j * rng.normal(size=21))
    z = roots(p, seed=5)
    assert z.size == 20
    assert np.max(backward_error(p.coeffs, z)) <= 1e-10


def test_roots_round_trip():
    rng = np.random.default_rng(11)
    while True:
        points = np.sqrt(rng.uniform(size=10)) * np.exp(2j * np.pi * rng.uniform(size=10))
        gaps = np.abs(points[:, None] - points[None, :]) + np.eye(10)
        if gaps.min() >= 5e-2:
            break
    recovered = roots(Poly.from_roots(points))
    assert matching_distance(recovered, points) <= 1e-7


def test_roots_constant_raises():
    with pytest.raises(ValueError):
        roots(Poly([3.0]))


def test_eval_is_multiplicative():
    rng = np.random.default_rng(2)
    p = Poly(rng.normal(size=6) + 1j * rng.normal(size=6))
    q = Poly(rng.normal(size=4))
    z = rng.normal(size=10) + 1j * rng.normal(size=10)
    pq = mul(p, q)
    gap = np.abs(pq.eval(z) - p.eval(z) * q.eval(z))
    assert np.all(gap <= 1e-12 * pq.eval_scale(z))


def test_convex_hull():
    hull = convex_hull([0, 1, 1j, 0.2 + 0.2j])
    assert sorted(hull.tolist(), key=lambda z: (z.real, z.imag)) == [0, 1j, 1]
    # counterclockwise: positive signed area
    area = 0.5 * np.sum(np.imag(np.conj(hull) * np.roll(hull, -1)))
    assert area > 0


def test_convex_hull_degenerate():
    assert convex_hull([2 + 1j]).tolist() == [2 + 1j]
    assert sorted(convex_hull([0, 0.5, 1]).real.tolist()) == [0.0, 1.0]
    with pytest.raises(EmptyPointSetError):
        convex_hull([])


def test_dist_to_hull_segment():
    assert dist_to_hull(2, convex_hull([0, 1])) == pytest.approx(1.0)
    assert dist_to_hull(0.5, convex_hull([0, 1])) == pytest.approx(0.0)


def test_dist_to_hull_sampling():
    rng = np.random.default_rng(7)
    hull = convex_hull(rng.normal(size=12) + 1j * rng.normal(size=12))
    t = np.linspace(0.0, 1.0, 20001)
    boundary = np.concatenate(
        [a + t * (b - a) for a, b in zip(hull, np.roll(hull, -1))]
    )
    for z in (4 + 1j, -3 - 3j, 0.5 + 5j):
        brute = np.min(np.abs(boundary - z))
        assert dist_to_hull(z, hull) == pytest.approx(brute, abs=1e-8)
    assert dist_to_hull(complex(np.mean(hull)), hull) == 0.0


def test_gauss_lucas():
    rng = np.random.default_rng(5)
    for _ in range(20):
        degree = int(rng.integers(3, 12))
        p = Poly(rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1))
        hull = convex_hull(roots(p))
        critical = roots(p.derivative())
        assert np.max(dist_to_hull(critical, hull)) <= 1e-8
