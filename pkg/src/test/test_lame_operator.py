import pytest
import sys
import os

import numpy as np

myPath = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, os.path.join(myPath, '../lamespectra'))

from src.lamespectra.errors import OperatorError
from src.lamespectra.lame_operator import (
    LameOperator,
    apply,
    falling,
    from_composition,
    leading_balance,
    validate,
)
from src.lamespectra.poly import Poly

# (z^2 + 1)(z - 3i - 2)(z + 2i - 3)
FIGURE_Q = Poly.from_roots([1j, -1j, 2 + 3j, 3 - 2j])


@pytest.fixture(scope='session')
def legendre():
    return LameOperator([Poly(), Poly([0, 2]), Poly([-1, 0, 1])])


@pytest.fixture(scope='session')
def heine():
    # k = 1, Q_1 = z(z - 1)
    return LameOperator([Poly(), Poly([0, -1, 1])])


@pytest.fixture(scope='session')
def composition():
    return from_composition(3, FIGURE_Q)


def test_falling():
    assert falling(5, 0) == 1
    assert falling(5, 3) == 60
    assert falling(2, 3) == 0


def test_validate_legendre(legendre):
    record = validate(legendre)
    assert record.r == 0
    assert record.nondegenerate
    assert record.exactly_solvable
    assert record.errors == []
    assert record.to_dict()['r'] == 0


def test_validate_heine(heine):
    record = heine.validate()
    assert record.r == 1
    assert record.nondegenerate
    assert not record.exactly_solvable


def test_validate_composition(composition):
    record = validate(composition)
    assert composition.k == 3
    assert record.r == 1
    assert record.nondegenerate


def test_validate_degenerate():
    # deg Q_2 = 1 < k + r = 3
    op = LameOperator([Poly(), Poly([0, 0, 1]), Poly([0, 1])])
    record = validate(op)
    assert record.r == 1
    assert not record.nondegenerate
    assert any('degenerate' in e for e in record.errors)
    with pytest.raises(OperatorError):
        leading_balance(op, 4)


def test_validate_negative_fuchs_index():
    op = LameOperator([Poly(), Poly(), Poly([1])])
    record = validate(op)
    assert record.r == -2
    assert not record.is_lame
    assert 'not a higher Lamé operator' in record.errors


def test_operator_errors():
    with pytest.raises(OperatorError):
        LameOperator([Poly(), Poly()])
    with pytest.raises(OperatorError):
        LameOperator([Poly([1])])
    with pytest.raises(OperatorError):
        LameOperator([Poly(), Poly([0, 0, 1])], fuchs_index=0)
    # deg Q_0 above the Fuchs index
    with pytest.raises(OperatorError):
        LameOperator([Poly([0, 0, 1]), Poly([0, 1])])


def test_apply_monomial():
    op = LameOperator([Poly(), Poly([0, 0, 1])])
    for n in range(1, 6):
        assert apply(op, Poly.monomial(n)) == Poly.monomial(n + 1, n)


def test_apply_legendre(legendre):
    s = Poly([-1, 0, 3])
    assert legendre.apply(s).allclose(s.scale(6))


def test_apply_constant(legendre):
    assert apply(legendre, Poly([1])).is_zero()
    op = from_composition(1, Poly([0, 1]))
    assert apply(op, Poly([1])) == Poly([1])


def test_apply_is_linear(composition):
    rng = np.random.default_rng(0)
    s = Poly(rng.normal(size=7) + 1j * rng.normal(size=7))
    t = Poly(rng.normal(size=5))
    alpha, beta = 2.0 - 1j, -0.5
    lhs = apply(composition, s.scale(alpha) + t.scale(beta))
    rhs = apply(composition, s).scale(alpha) + apply(composition, t).scale(beta)
    assert lhs.allclose(rhs)


def test_apply_degree(composition, heine):
    for op in (composition, heine):
        for n in range(op.k, op.k + 6):
            image = apply(op, Poly.monomial(n))
            assert image.degree() == n + op.r
            assert image.leading == pytest.approx(-leading_balance(op, n), rel=1e-12)


def test_from_composition_first_order():
    op = from_composition(1, Poly([0, 1]))
    assert op.q[1] == Poly([0, 1])
    assert op.q[0] == Poly([1])
    assert op.r == 0


def test_from_composition_coefficients(composition):
    d1 = FIGURE_Q.derivative()
    d2 = d1.derivative()
    d3 = d2.derivative()
    assert composition.q[3].allclose(FIGURE_Q)
    assert composition.q[2].allclose(d1.scale(3))
    assert composition.q[1].allclose(d2.scale(3))
    assert composition.q[0].allclose(d3)


def test_from_composition_matches_product_derivative(composition):
    rng = np.random.default_rng(6)
    for degree in (3, 6, 10):
        S = Poly(rng.normal(size=degree + 1) + 1j * rng.normal(size=degree + 1))
        direct = FIGURE_Q * S
        for _ in range(3):
            direct = direct.derivative()
        assert apply(composition, S).allclose(direct)


def test_from_composition_errors():
    with pytest.raises(OperatorError):
        from_composition(3, Poly([1, 0, 1]))
    with pytest.raises(OperatorError):
        from_composition(0, FIGURE_Q)


def test_leading_balance(heine, composition):
    lame = LameOperator([Poly(), Poly(), Poly([0, -1, 0, 1])])
    for n in range(3, 12):
        assert leading_balance(heine, n) == pytest.approx(-n)
        assert leading_balance(lame, n) == pytest.approx(-n * (n - 1))
        assert leading_balance(composition, n) == pytest.approx(-(n + 2) * (n + 3) * (n + 4))


def test_json(composition):
    data = composition.to_json()
    assert data['k'] == 3
    again = LameOperator.from_json(data)
    assert all(a.allclose(b) for a, b in zip(again.q, composition.q))
    op = LameOperator.from_json({'k': 1, 'coeffs': [{'re': [0.0, -1.0, 1.0]}]})
    assert op.q[0].is_zero()
    assert op.r == 1
    op = LameOperator.from_json({'k': 3, 'composition_of': FIGURE_Q.to_json()})
    assert op.r == 1
    with pytest.raises(OperatorError):
        LameOperator.from_json({'k': 2, 'coeffs': [{'re': [1.0]}]})
    with pytest.raises(OperatorError):
        LameOperator.from_json({'k': 2})


def test_scaled(heine):
    scaled = heine.scaled(2.5)
    assert scaled.q[1] == Poly([0, -2.5, 2.5])
    assert leading_balance(scaled, 4) == pytest.approx(2.5 * leading_balance(heine, 4))


def test_rescaled(composition):
    center, radius = 1.5 + 0.5j, 2.5
    work = composition.rescaled(center, radius)
    assert work.k == 3
    assert work.r == 1
    S = Poly.from_roots([0.5, 1 + 1j, 2 - 1j, -0.5j, 1.2])
    lhs = apply(work, S.compose_affine(center, radius))
    rhs = apply(composition, S).compose_affine(center, radius)
    assert lhs.allclose(rhs, rtol=1e-12)
    assert leading_balance(work, 10) == pytest.approx(radius * leading_balance(composition, 10))
