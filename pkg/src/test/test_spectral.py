import pytest
import sys
import os

import numpy as np
from scipy.special import roots_legendre

myPath = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(myPath, '../lamespectra'))

from src.lamespectra.errors import (
    OperatorError,
    ResonanceError,
    SpectralError,
    UnsupportedEnumerationError,
)
from src.lamespectra.lame_operator import LameOperator, apply, from_composition, leading_balance
from src.lamespectra.measure import hull_check
from src.lamespectra.poly import Poly
from src.lamespectra.spectral import (
    ACCEPT_RESIDUAL,
    SpectrumReport,
    enumerate_pairs,
    follow_sequence,
    interlacing_seed,
    lower_degree_candidate,
    make_pair,
    matching_distance,
    newton_refine,
    pair_residual,
    select_sequence,
    solve_exact,
    solve_r1,
    working_frame,
)

FIGURE_Q = Poly.from_roots([1j, -1j, 2 + 3j, 3 - 2j])


@pytest.fixture(scope='session')
def legendre():
    return LameOperator([Poly(), Poly([0, 2]), Poly([-1, 0, 1])])


@pytest.fixture(scope='session')
def heine():
    return LameOperator([Poly(), Poly([0, -1, 1])])


@pytest.fixture(scope='session')
def lame():
    # (z^3 - z) S'' + V S = 0
    return LameOperator([Poly(), Poly(), Poly([0, -1, 0, 1])])


@pytest.fixture(scope='session')
def composition():
    return from_composition(3, FIGURE_Q)


def full_residual(op, pair):
    # apply(op, S) + V S, relative to the largest coefficient of its terms
    R = apply(op, pair.S) + pair.V * pair.S
    scale = max(apply(op, pair.S).max_coeff(), (pair.V * pair.S).max_coeff())
    return R.max_coeff() / scale


def test_solve_exact_monomial():
    op = LameOperator([Poly(), Poly(), Poly([0, 0, 1])])
    pair = solve_exact(op, 3)
    assert pair.V.allclose(Poly([-6]))
    assert pair.S.allclose(Poly.monomial(3))
    assert pair.residual <= 1e-12


def test_solve_exact_legendre(legendre):
    pair = solve_exact(legendre, 4)
    assert pair.V.allclose(Poly([-20]))
    nodes = roots_legendre(4)[0]
    zeros = pair.stieltjes_roots()
    assert np.max(np.abs(zeros.imag)) <= 1e-10
    assert np.allclose(np.sort(zeros.real), nodes, atol=1e-10, rtol=0)


def test_legendre_eigenvalues_strictly_increase(legendre):
    lam = [-leading_balance(legendre, n) for n in range(201)]
    assert all(b > a for a, b in zip(lam, lam[1:]))
    assert lam[7] == pytest.approx(56)


def test_solve_exact_resonance():
    # lambda_1 = lambda_0 = 0 for z^2 S''
    op = LameOperator([Poly(), Poly(), Poly([0, 0, 1])])
    with pytest.raises(ResonanceError):
        solve_exact(op, 1)


def test_solve_exact_refuses_r1(heine):
    with pytest.raises(OperatorError):
        solve_exact(heine, 3)


def test_solve_r1_heine(heine):
    report = solve_r1(heine, 3)
    assert report.found_count == 4
    assert report.expected_count == 4
    assert np.allclose([p.b for p in report.pairs], [0, 1, 2, 3], atol=1e-10)
    for m, pair in enumerate(report.pairs):
        expected = Poly.from_roots([0.0] * m + [1.0] * (3 - m))
        assert np.allclose(pair.S.coeffs, expected.coeffs, atol=1e-10)
        assert pair.V.coeff(1) == pytest.approx(-3)
        assert pair.residual <= ACCEPT_RESIDUAL


def test_solve_r1_lame(lame):
    report = solve_r1(lame, 2)
    assert report.found_count == 3
    assert np.allclose([p.b for p in report.pairs], [-2, 0, 2], atol=1e-10)
    expected = [Poly([0, -1, 1]), Poly([-1, 0, 1]), Poly([0, 1, 1])]
    for pair, S in zip(report.pairs, expected):
        assert np.allclose(pair.S.coeffs, S.coeffs, atol=1e-10)
        assert pair.V.coeff(1) == pytest.approx(-2)


@pytest.mark.parametrize('n', [1, 2, 5, 10, 17, 25])
def test_count_heine(heine, n):
    report = enumerate_pairs(heine, n)
    assert report.found_count == n + 1
    for pair in report.pairs:
        assert pair.V.degree() == 1
        assert pair.residual <= ACCEPT_RESIDUAL


@pytest.mark.parametrize('n', range(2, 26))
def test_count_lame(lame, n):
    report = enumerate_pairs(lame, n)
    assert report.found_count == n + 1
    assert all(p.V.degree() == 1 for p in report.pairs)


def test_pairs_satisfy_equation(composition):
    report = enumerate_pairs(composition, 10)
    assert report.found_count == 11
    for pair in report.pairs:
        assert pair.S.degree() == 10
        assert pair.S.leading == pytest.approx(1)
        assert pair.V.coeff(1) == pytest.approx(leading_balance(composition, 10), rel=1e-10)
        assert pair_residual(composition, pair.S, pair.V) <= ACCEPT_RESIDUAL
        assert full_residual(composition, pair) <= ACCEPT_RESIDUAL


def test_pairs_sorted_by_b(composition):
    b = [p.b for p in enumerate_pairs(composition, 8).pairs]
    keys = [(round(x.real, 9), round(x.imag, 9)) for x in b]
    assert keys == sorted(keys)


def test_scaling_covariance(heine):
    c = 2.5 - 1j
    base = enumerate_pairs(heine, 4)
    scaled = enumerate_pairs(heine.scaled(c), 4)
    assert scaled.found_count == base.found_count
    for pair in base.pairs:
        match = min(scaled.pairs, key=lambda p: matching_distance(p.stieltjes_roots(), pair.stieltjes_roots()))
        assert np.allclose(match.S.coeffs, pair.S.coeffs, atol=1e-9)
        assert np.allclose(match.V.coeffs, c * pair.V.coeffs, atol=1e-9)


def test_newton_fixed_point(heine):
    S = Poly.from_roots([0, 0, 1])
    pair = make_pair(heine, 3, S, Poly([2, -3]))
    refined = newton_refine(heine, pair)
    assert np.allclose(refined.S.coeffs, S.coeffs, atol=1e-14)
    assert refined.residual <= 1e-14


def test_newton_recovers_perturbed_pair(lame):
    rng = np.random.default_rng(8)
    noise = 1e-4 * (rng.normal(size=2) + 1j * rng.normal(size=2))
    S = Poly([-1 + noise[0], noise[1], 1])
    V = Poly([1e-4, -2])
    pair = make_pair(lame, 2, S, V)
    assert pair.residual > 1e-6
    refined = newton_refine(lame, pair)
    assert refined.residual <= 1e-12
    assert np.allclose(refined.S.coeffs, [-1, 0, 1], atol=1e-10)
    assert abs(refined.b) <= 1e-10


def test_newton_improves_composition_pair(composition):
    report = enumerate_pairs(composition, 20)
    pair = report.pairs[len(report.pairs) // 2]
    rng = np.random.default_rng(12)
    s = pair.S.coeffs * (1 + 1e-6 * rng.normal(size=pair.S.coeffs.size))
    s[-1] = 1.0
    noisy = make_pair(composition, 20, Poly(s), pair.V)
    assert noisy.residual > 1e-10
    refined = newton_refine(composition, noisy)
    assert refined.residual <= max(1e-12, 1e-4 * noisy.residual)


def test_enumerate_dispatch(legendre):
    report = enumerate_pairs(legendre, 5)
    assert report.found_count == 1
    assert report.expected_count == 1
    op = LameOperator([Poly(), Poly([0, 0, 0, 1])])
    assert op.r == 2
    with pytest.raises(UnsupportedEnumerationError):
        enumerate_pairs(op, 4)


def test_enumerate_refuses_degenerate():
    op = LameOperator([Poly(), Poly([0, 0, 1]), Poly([0, 1])])
    with pytest.raises(OperatorError):
        enumerate_pairs(op, 4)


def test_select_sequence(heine):
    pairs = select_sequence(heine, Poly([-0.5, 1]), [4, 6, 8])
    assert [p.n for p in pairs] == [4, 6, 8]
    for pair in pairs:
        assert pair.b == pytest.approx(pair.n / 2)
        assert pair.normalized_V.allclose(Poly([-0.5, 1]))
    pair = select_sequence(heine, Poly([-1 / 3, 1]), [9])[0]
    assert pair.b == pytest.approx(3)


def test_select_sequence_target_degree(heine):
    with pytest.raises(ValueError):
        select_sequence(heine, Poly([1, 0, 1]), [4])


def test_matching_distance():
    assert matching_distance([0, 1], [1.1, 0]) == pytest.approx(0.1)
    assert matching_distance([], []) == 0.0
    assert matching_distance([0], [0, 1]) == float('inf')


def test_interlacing_seed():
    seed = interlacing_seed(np.array([-1.0, 0.0, 1.0], dtype=complex))
    assert seed.size == 4
    assert np.allclose(np.sort(seed.real), [-1.5, -0.5, 0.5, 1.5])


def test_follow_sequence_legendre(legendre):
    start = solve_exact(legendre, 4)
    sequence = follow_sequence(legendre, start, 7)
    assert [p.n for p in sequence] == [5, 6, 7]
    for pair in sequence:
        nodes = roots_legendre(pair.n)[0]
        assert matching_distance(pair.stieltjes_roots(), nodes) <= 1e-8
        assert pair.V.allclose(Poly([-pair.n * (pair.n + 1)]))
        assert pair.basis == 'roots'


def test_follow_sequence_needs_higher_order(heine):
    pair = enumerate_pairs(heine, 3).pairs[0]
    with pytest.raises(OperatorError):
        follow_sequence(heine, pair, 5)


def test_report_outputs(heine):
    report = enumerate_pairs(heine, 3)
    data = report.to_dict()
    assert data['found_count'] == 4
    assert len(data['pairs']) == 4
    frame = report.to_frame()
    # three S zeros and one V zero per pair
    assert len(frame) == 4 * 4
    assert set(frame['kind']) == {'S', 'V'}


def test_empty_spectrum_raises():
    heine = LameOperator([Poly(), Poly([0, -1, 1])])
    empty = SpectrumReport(n=3, pairs=[], expected_count=4)
    with pytest.raises(SpectralError) as e:
        select_sequence(heine, Poly([0, 1]), [3], reports={3: empty})
    assert e.value.report is empty
    assert 'n=3' in str(e.value)


@pytest.mark.slow
def test_figure_one_count(composition):
    report = enumerate_pairs(composition, 39)
    assert report.found_count == 40
    assert all(p.residual <= ACCEPT_RESIDUAL for p in report.pairs)


@pytest.mark.slow
def test_legendre_large_degree(legendre):
    pair = follow_sequence(legendre, solve_exact(legendre, 30), 200)[-1]
    assert pair.n == 200
    assert matching_distance(pair.stieltjes_roots(), roots_legendre(200)[0]) <= 1e-8


def test_working_frame(heine, lame):
    center, radius = working_frame(heine)
    assert center == pytest.approx(0.5)
    assert radius == pytest.approx(0.5)
    center, radius = working_frame(lame)
    assert abs(center) <= 1e-12
    assert radius == pytest.approx(1.0)


def test_lower_degree_candidate():
    # (x - 0.5)^4 has its zeros in the unit disk
    genuine = Poly.from_roots([0.5] * 4).coeffs
    assert not lower_degree_candidate(genuine)
    # a cubic padded to degree 4
    padded = np.concatenate([Poly.from_roots([0.5, -0.5j, 0.9]).coeffs, [0.0]])
    assert lower_degree_candidate(padded)
    # small leading coefficient of a genuine polynomial with spread-out zeros
    spread = Poly.from_roots(0.99 * np.exp(2j * np.pi * np.arange(30) / 30 + 0.1j)).coeffs
    assert not lower_degree_candidate(1e-12 * spread)


@pytest.mark.parametrize('n', [20, 30])
def test_figure_one_count_mid_degree(composition, n):
    report = enumerate_pairs(composition, n)
    assert report.found_count == n + 1
    for pair in report.pairs:
        assert pair.S.degree() == n
        assert pair.V.degree() == 1
        assert pair.residual <= ACCEPT_RESIDUAL
    assert hull_check(report.pairs, composition.leading, 0.15).passed


def test_select_sequence_mid_degree(composition):
    report = enumerate_pairs(composition, 20)
    target = report.pairs[len(report.pairs) // 2].normalized_V
    pairs = select_sequence(composition, target, [20, 30])
    assert [p.n for p in pairs] == [20, 30]
    assert pairs[0].normalized_V.allclose(target)


@pytest.mark.slow
def test_figure_one_localization(composition):
    distances = []
    for n in (10, 20, 30, 39):
        report = hull_check(enumerate_pairs(composition, n).pairs, composition.leading, 0.15)
        if n >= 20:
            assert report.passed
        distances.append(report.max_distance)
    assert all(b <= a + 1e-3 for a, b in zip(distances, distances[1:]))
