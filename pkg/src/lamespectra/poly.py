"""
complex polynomials in ascending coefficient order, root finding and
geometric helpers on root sets
"""

import logging

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import ConvexHull, QhullError
from scipy.special import logsumexp

from .errors import EmptyPointSetError, RootFindingError, ZeroPolynomialError

TRIM_RTOL = 1e-14
ROOT_RESIDUAL_TOL = 1e-10
CLUSTER_RADIUS = 1e-4
EPS = np.finfo(float).eps


def _trim(coeffs, magnitude=None):
    """
    drop leading zeros; with magnitude (the size of the terms that produced
    each coefficient) also drop leading coefficients that cancelled below
    TRIM_RTOL of it
    """
    c = np.array(coeffs, dtype=complex).ravel()
    if magnitude is None:
        keep = np.nonzero(c != 0)[0]
    else:
        keep = np.nonzero((c != 0) & (np.abs(c) > TRIM_RTOL * magnitude))[0]
    if keep.size == 0:
        return np.zeros(0, dtype=complex)
    return c[: keep[-1] + 1].copy()


def horner(coeffs, z):
    """evaluate ascending coefficients at z (scalar or array)"""
    z = np.asarray(z, dtype=complex)
    result = np.zeros_like(z)
    for c in coeffs[::-1]:
        result = result * z + c
    return result


class Poly:
    """
    univariate polynomial with complex coefficients

    parameters:
    -----------
    coeffs: sequence of complex, constant term first; an empty
        sequence is the zero polynomial
    """

    __slots__ = ('_c',)

    def __init__(self, coeffs=()):
        c = _trim(coeffs)
        c.setflags(write=False)
        self._c = c

    @property
    def coeffs(self):
        return self._c

    def degree(self):
        # -1 for the zero polynomial
        return self._c.size - 1

    def is_zero(self):
        return self._c.size == 0

    @property
    def leading(self):
        if self.is_zero():
            return 0j
        return complex(self._c[-1])

    def coeff(self, m):
        if 0 <= m < self._c.size:
            return complex(self._c[m])
        return 0j

    def max_coeff(self):
        if self.is_zero():
            return 0.0
        return float(np.max(np.abs(self._c)))

    def eval(self, z):
        value = horner(self._c, z)
        if value.ndim == 0:
            return complex(value)
        return value

    __call__ = eval

    def eval_scale(self, z):
        """sum |c_i| |z|^i, the magnitude against which eval(z) is judged"""
        value = horner(np.abs(self._c), np.abs(np.asarray(z, dtype=complex)))
        return value.real

    def derivative(self):
        if self._c.size <= 1:
            return Poly()
        return Poly(self._c[1:] * np.arange(1, self._c.size))

    def __add__(self, other):
        other = as_poly(other)
        size = max(self._c.size, other._c.size)
        total = np.zeros(size, dtype=complex)
        total[: self._c.size] += self._c
        total[: other._c.size] += other._c
        magnitude = np.zeros(size)
        magnitude[: self._c.size] += np.abs(self._c)
        magnitude[: other._c.size] += np.abs(other._c)
        return Poly(_trim(total, magnitude))

    __radd__ = __add__

    def __neg__(self):
        return Poly(-self._c)

    def __sub__(self, other):
        return self + (-as_poly(other))

    def __rsub__(self, other):
        return as_poly(other) - self

    def __mul__(self, other):
        if np.isscalar(other):
            return self.scale(other)
        other = as_poly(other)
        if self.is_zero() or other.is_zero():
            return Poly()
        magnitude = np.convolve(np.abs(self._c), np.abs(other._c))
        return Poly(_trim(np.convolve(self._c, other._c), magnitude))

    __rmul__ = __mul__

    def scale(self, factor):
        factor = complex(factor)
        return Poly(_trim(self._c * factor, np.abs(self._c) * abs(factor)))

    def compose_affine(self, shift, factor):
        """p(shift + factor * x) as a polynomial in x"""
        inner = Poly([shift, factor])
        result = Poly()
        for c in self._c[::-1]:
            result = result * inner + Poly([c])
        return result

    def shift_degree(self, m):
        """multiply by z^m"""
        if self.is_zero():
            return Poly()
        return Poly(np.concatenate([np.zeros(m, dtype=complex), self._c]))

    def monic(self):
        if self.is_zero():
            raise ZeroPolynomialError()
        c = self._c / self._c[-1]
        c[-1] = 1.0
        return Poly(c)

    def roots(self, seed=0):
        return roots(self, seed=seed)

    def allclose(self, other, rtol=1e-12):
        other = as_poly(other)
        size = max(self._c.size, other._c.size)
        a = np.zeros(size, dtype=complex)
        b = np.zeros(size, dtype=complex)
        a[: self._c.size] = self._c
        b[: other._c.size] = other._c
        scale = max(self.max_coeff(), other.max_coeff(), 1e-300)
        return bool(np.max(np.abs(a - b), initial=0.0) <= rtol * scale)

    def to_json(self):
        return {
            're': [float(x) for x in self._c.real],
            'im': [float(x) for x in self._c.imag],
        }

    @classmethod
    def from_json(cls, data):
        re = list(data.get('re', []))
        im = list(data.get('im', [0.0] * len(re)))
        if len(im) != len(re):
            raise ValueError(
                f'polynomial JSON has {len(re)} real and {len(im)} imaginary parts'
            )
        return cls(np.array(re, dtype=float) + 1j * np.array(im, dtype=float))

    @classmethod
    def from_roots(cls, points, leading=1.0):
        points = np.asarray(points, dtype=complex).ravel()
        if points.size == 0:
            return cls([leading])
        return cls(np.poly(points)[::-1] * leading)

    @classmethod
    def monomial(cls, m, coeff=1.0):
        c = np.zeros(m + 1, dtype=complex)
        c[m] = coeff
        return cls(c)

    def __eq__(self, other):
        if not isinstance(other, Poly):
            return NotImplemented
        return self._c.shape == other._c.shape and bool(
            np.all(self._c == other._c)
        )

    def __hash__(self):
        return hash(self._c.tobytes())

    def __repr__(self):
        terms = ', '.join(f'{complex(c):.6g}' for c in self._c)
        return f'Poly([{terms}])'


def as_poly(value):
    if isinstance(value, Poly):
        return value
    if np.isscalar(value):
        return Poly([value])
    return Poly(value)


def derivative(p):
    return p.derivative()


def add(p, q):
    return p + q


def mul(p, q):
    return p * q


def scale(p, c):
    return p.scale(c)


def monic(p):
    return p.monic()


def from_roots(points, leading=1.0):
    return Poly.from_roots(points, leading)


def cauchy_radius(p):
    """
    unique positive root of |a_n| x^n = sum_{i<n} |a_i| x^i,
    the tight Cauchy bound on the moduli of the roots
    """
    c = np.abs(p.coeffs)
    n = c.size - 1
    lower = c[:-1]
    nonzero = np.nonzero(lower > 0)[0]
    if nonzero.size == 0:
        return 0.0
    log_a = np.log(lower[nonzero] / c[-1])
    powers = nonzero - n

    # g(t) = log sum |a_i| e^{(i-n) t}, decreasing in t; solve g = 0
    def g(t):
        return logsumexp(log_a + powers * t)

    hi = np.logaddexp(0.0, np.max(log_a))
    lo = hi - 1.0
    while g(lo) < 0:
        lo -= 1.0
    return float(np.exp(brentq(g, lo, hi + 1e-12, xtol=1e-12)))


def backward_error(coeffs, z):
    value = np.abs(horner(coeffs, z))
    scale = horner(np.abs(coeffs), np.abs(z)).real
    return np.where(scale > 0, value / np.where(scale > 0, scale, 1.0), value)


def roots(p, seed=0, max_iter=None):
    """
    all roots of p with multiplicity by Aberth-Ehrlich simultaneous
    iteration from a perturbed circle, followed by Newton polishing

    parameters:
    -----------
    p: Poly of degree >= 1
    seed: seed for the random rotation of the starting circle
    max_iter: iteration cap (default 500 + 10 * degree)

    returns:
    --------
    complex ndarray of roots sorted by (real, imag)
    """
    n = p.degree()
    if n < 1:
        raise ValueError(f'roots requires degree >= 1, got {n}')
    c = p.coeffs
    if n == 1:
        return np.array([-c[0] / c[1]])
    if max_iter is None:
        max_iter = 500 + 10 * n

    # exact zero roots are split off first
    n_zero = int(np.argmax(c != 0))
    if n_zero > 0:
        rest = Poly(c[n_zero:])
        others = np.zeros(0, dtype=complex)
        if rest.degree() > 0:
            others = roots(rest, seed=seed, max_iter=max_iter)
        z = np.concatenate([np.zeros(n_zero, dtype=complex), others])
        return z[np.lexsort((z.imag, z.real))]

    dc = p.derivative().coeffs
    radius = cauchy_radius(p)
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2.0 * np.pi)
    z = radius * np.exp(1j * (2.0 * np.pi * np.arange(n) / n + phase + 0.25 / n))

    active = np.ones(n, dtype=bool)
    for iteration in range(max_iter):
        pz = horner(c, z)
        dpz = horner(dc, z)
        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.where(dpz != 0, pz / dpz, pz / (EPS * (1 + np.abs(z))))
            diff = z[:, None] - z[None, :]
            np.fill_diagonal(diff, np.inf)
            repulsion = np.sum(1.0 / diff, axis=1)
            step = ratio / (1.0 - ratio * repulsion)
        step = np.where(np.isfinite(step), step, 0.0)
        z = np.where(active, z - step, z)
        err = backward_error(c, z)
        active = (err > 4 * EPS) & (np.abs(step) > 4 * EPS * np.abs(z))
        if not active.any():
            logging.debug(f'aberth converged after {iteration + 1} iterations (degree {n})')
            break
    else:
        logging.debug(f'aberth reached the iteration cap {max_iter} (degree {n})')

    z = _newton_polish(c, dc, z)
    residual = float(np.max(backward_error(c, z)))
    if not np.all(np.isfinite(z)) or residual > ROOT_RESIDUAL_TOL:
        raise RootFindingError(
            f'root finding did not converge (degree {n}, residual {residual:.3e})',
            best=z,
            residual=residual,
        )
    return z[np.lexsort((z.imag, z.real))]


def _newton_polish(c, dc, z, steps=2):
    for _ in range(steps):
        pz = horner(c, z)
        dpz = horner(dc, z)
        with np.errstate(divide='ignore', invalid='ignore'):
            candidate = z - pz / dpz
        better = np.isfinite(candidate) & (
            np.abs(horner(c, candidate)) < np.abs(pz)
        )
        z = np.where(better, candidate, z)
    return z


def cluster_points(points, radius=CLUSTER_RADIUS):
    """group points closer than radius; returns list of (center, size)"""
    points = np.asarray(points, dtype=complex).ravel()
    remaining = list(range(points.size))
    clusters = []
    while remaining:
        seed = remaining.pop(0)
        members = [seed]
        frontier = [seed]
        while frontier:
            i = frontier.pop()
            near = [j for j in remaining if abs(points[j] - points[i]) <= radius]
            for j in near:
                remaining.remove(j)
            members.extend(near)
            frontier.extend(near)
        clusters.append((complex(np.mean(points[members])), len(members)))
    return clusters


def convex_hull(points):
    """hull vertices in counterclockwise order"""
    points = np.asarray(points, dtype=complex).ravel()
    if points.size == 0:
        raise EmptyPointSetError('convex hull of an empty point set')
    unique = np.unique(np.round(points, 15))
    if unique.size == 1:
        return unique[:1]
    if unique.size >= 3:
        try:
            hull = ConvexHull(np.column_stack([unique.real, unique.imag]))
            return unique[hull.vertices]
        except QhullError:
            pass
    # collinear input: the hull is the segment between the two extremes
    a = unique[np.argmax(np.abs(unique - unique[0]))]
    b = unique[np.argmax(np.abs(unique - a))]
    return np.array([a, b])


def segment_distance(z, a, b):
    d = b - a
    length2 = np.abs(d) ** 2
    if length2 == 0:
        return np.abs(z - a)
    t = np.clip(np.real(np.conj(d) * (z - a)) / length2, 0.0, 1.0)
    return np.abs(z - (a + t * d))


def dist_to_hull(z, hull):
    """Euclidean distance from z (scalar or array) to the hull polygon, 0 inside"""
    hull = np.asarray(hull, dtype=complex).ravel()
    if hull.size == 0:
        raise EmptyPointSetError('distance to an empty hull')
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    if hull.size == 1:
        dist = np.abs(zz - hull[0])
    elif hull.size == 2:
        dist = segment_distance(zz, hull[0], hull[1])
    else:
        nxt = np.roll(hull, -1)
        dist = np.min(
            [segment_distance(zz, a, b) for a, b in zip(hull, nxt)], axis=0
        )
        edges = nxt - hull
        cross = np.imag(np.conj(edges)[None, :] * (zz[:, None] - hull[None, :]))
        scale = np.max(np.abs(hull))
        inside = np.all(cross >= -1e-14 * max(scale, 1.0) ** 2, axis=1)
        dist = np.where(inside, 0.0, dist)
    if np.ndim(z) == 0:
        return float(dist[0])
    return dist
