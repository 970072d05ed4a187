"""
higher Lamé operators T = sum_{i=1..k} Q_i d^i/dz^i plus an optional
order-zero term Q_0
"""

import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import OperatorError
from .poly import Poly, as_poly


def falling(n, i):
    """falling factorial n (n-1) ... (n-i+1)"""
    result = 1
    for t in range(i):
        result *= n - t
    return result


@dataclass
class Classification:
    r: int
    nondegenerate: bool
    exactly_solvable: bool
    errors: list = field(default_factory=list)

    @property
    def is_lame(self):
        return self.r >= 0

    def to_dict(self):
        return {
            'r': self.r,
            'nondegenerate': self.nondegenerate,
            'exactly_solvable': self.exactly_solvable,
            'errors': list(self.errors),
        }


class LameOperator:
    """
    parameters:
    -----------
    q: sequence Q_0..Q_k of Poly (or coefficient sequences); index is the
        derivative order, Q_0 may be zero
    fuchs_index: optional stored value, checked against the coefficients
    """

    def __init__(self, q, fuchs_index=None):
        q = tuple(as_poly(p) for p in q)
        if len(q) < 2:
            raise OperatorError('an operator needs Q_0 and at least Q_1')
        self.q = q
        self.k = len(q) - 1
        if q[-1].is_zero():
            raise OperatorError(f'leading coefficient Q_{self.k} is zero')
        self.fuchs_index = max(
            q[i].degree() - i for i in range(1, self.k + 1) if not q[i].is_zero()
        )
        if fuchs_index is not None and int(fuchs_index) != self.fuchs_index:
            raise OperatorError(
                f'stored Fuchs index {fuchs_index} does not match the coefficients '
                f'({self.fuchs_index})'
            )
        if not q[0].is_zero() and q[0].degree() > self.fuchs_index:
            raise OperatorError(
                f'deg Q_0 = {q[0].degree()} exceeds the Fuchs index '
                f'{self.fuchs_index}; it could not be absorbed into V'
            )

    @property
    def r(self):
        return self.fuchs_index

    @property
    def leading(self):
        return self.q[self.k]

    @property
    def nondegenerate(self):
        return self.r >= 0 and self.leading.degree() == self.k + self.r

    def validate(self):
        return validate(self)

    def apply(self, s):
        return apply(self, s)

    def column(self, j, size):
        """coefficients 0..size-1 of (T + Q_0)(z^j)"""
        col = np.zeros(size, dtype=complex)
        for i in range(0, min(j, self.k) + 1):
            qi = self.q[i].coeffs
            if qi.size == 0:
                continue
            factor = falling(j, i)
            if factor == 0:
                continue
            lo = j - i
            hi = min(lo + qi.size, size)
            if hi > lo:
                col[lo:hi] += factor * qi[: hi - lo]
        return col

    def matrix(self, n, rows=None):
        """
        coefficient matrix M with M[m, j] = coefficient of z^m in
        (T + Q_0)(z^j), j = 0..n, m = 0..rows-1 (default n + r + 1)
        """
        if rows is None:
            rows = n + max(self.r, 0) + 1
        M = np.zeros((rows, n + 1), dtype=complex)
        for j in range(n + 1):
            M[:, j] = self.column(j, rows)
        return M

    def scaled(self, c):
        return LameOperator([p.scale(c) for p in self.q])

    def rescaled(self, center, radius):
        """
        the operator in x = (z - center) / radius: Q_i(center + radius x) / radius^i;
        a pair (V(z), S(z)) becomes (V(center + radius x), S(center + radius x))
        """
        return LameOperator(
            [p.compose_affine(center, radius).scale(radius ** -i) for i, p in enumerate(self.q)]
        )

    def to_json(self):
        return {'k': self.k, 'coeffs': [p.to_json() for p in self.q]}

    @classmethod
    def from_json(cls, data):
        """accepts {"k", "coeffs"} or {"k", "composition_of"}"""
        if 'composition_of' in data:
            return from_composition(int(data['k']), Poly.from_json(data['composition_of']))
        if 'coeffs' not in data:
            raise OperatorError('operator JSON needs "coeffs" or "composition_of"')
        coeffs = [Poly.from_json(p) for p in data['coeffs']]
        k = int(data.get('k', len(coeffs) - 1))
        if len(coeffs) == k:
            # Q_0 omitted
            coeffs = [Poly()] + coeffs
        if len(coeffs) != k + 1:
            raise OperatorError(
                f'operator of order {k} needs {k + 1} coefficients, got {len(coeffs)}'
            )
        return cls(coeffs, fuchs_index=data.get('r'))

    def __repr__(self):
        return f'LameOperator(k={self.k}, r={self.r}, nondegenerate={self.nondegenerate})'


def validate(op):
    """classification record; problems are reported, not raised"""
    r = op.fuchs_index
    errors = []
    if r < 0:
        errors.append('not a higher Lamé operator')
    nondegenerate = r >= 0 and op.leading.degree() == op.k + r
    if r >= 0 and not nondegenerate:
        errors.append(
            f'degenerate: deg Q_{op.k} = {op.leading.degree()} < k + r = {op.k + r}'
        )
    return Classification(
        r=r,
        nondegenerate=nondegenerate,
        exactly_solvable=(r == 0),
        errors=errors,
    )


def apply(op, s):
    """sum_{i=0..k} Q_i s^(i)"""
    s = as_poly(s)
    total = Poly()
    deriv = s
    for i in range(op.k + 1):
        if deriv.is_zero():
            break
        if not op.q[i].is_zero():
            total = total + op.q[i] * deriv
        deriv = deriv.derivative()
    return total


def from_composition(k, Q):
    """
    operator of S -> (Q S)^(k) via Leibniz: Q_i = C(k, i) Q^(k-i),
    including Q_0 = Q^(k)
    """
    Q = as_poly(Q)
    if k < 1:
        raise OperatorError(f'composition order must be >= 1, got {k}')
    if Q.degree() < k:
        raise OperatorError(
            f'deg Q = {Q.degree()} < k = {k}: the Fuchs index would be negative'
        )
    derivs = [Q]
    for _ in range(k):
        derivs.append(derivs[-1].derivative())
    q = [derivs[k - i].scale(comb(k, i)) for i in range(k + 1)]
    op = LameOperator(q)
    logging.debug(f'composition operator of order {k}: r = {op.r}')
    return op


def leading_balance(op, n):
    """
    forced leading coefficient a_r of every Van Vleck polynomial paired
    with a degree-n Stieltjes polynomial
    """
    if not op.nondegenerate:
        raise OperatorError(
            f'leading balance needs a non-degenerate operator ({validate(op).errors})'
        )
    if n < 0:
        raise ValueError(f'degree must be >= 0, got {n}')
    r = op.r
    total = 0j
    for i in range(1, op.k + 1):
        qi = op.q[i]
        if not qi.is_zero() and qi.degree() == i + r:
            total += qi.leading * falling(n, i)
    total += op.q[0].coeff(r)
    return -total
