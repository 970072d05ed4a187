"""
root-counting measures, their Cauchy transforms and logarithmic
potentials, and probe comparisons against the algebraic limit law
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .errors import MeasureError, OnSupportError, ProbeStandoffError
from .poly import Poly, as_poly, convex_hull, dist_to_hull, roots as poly_roots

ON_SUPPORT_ATOL = 1e-12
WEIGHT_ATOL = 1e-12
DEFAULT_PROBE_COUNT = 16
DEFAULT_PROBE_MARGIN = 1.5
DEFAULT_STANDOFF = 0.5


@dataclass(frozen=True)
class RootMeasure:
    """
    finite atomic probability measure

    parameters:
    -----------
    points: complex ndarray of atom positions (repeated for multiplicity)
    weights: positive real ndarray summing to 1
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=complex).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        if points.size == 0:
            raise MeasureError('a root measure needs at least one atom')
        if points.size != weights.size:
            raise MeasureError(
                f'{points.size} atoms but {weights.size} weights'
            )
        if np.any(weights <= 0):
            raise MeasureError('atom weights must be positive')
        if abs(weights.sum() - 1.0) > WEIGHT_ATOL:
            raise MeasureError(f'weights sum to {weights.sum():.15g}, not 1')
        object.__setattr__(self, 'points', points)
        object.__setattr__(self, 'weights', weights)

    @property
    def size(self):
        return self.points.size

    def atoms(self):
        return list(zip(self.points.tolist(), self.weights.tolist()))

    def cauchy(self, z):
        return cauchy(self, z)

    def potential(self, z):
        return potential(self, z)

    def to_frame(self):
        return pd.DataFrame(
            {
                're': self.points.real,
                'im': self.points.imag,
                'weight': self.weights,
            }
        )


def from_roots(points):
    """uniform probability measure on a zero set"""
    points = np.asarray(points, dtype=complex).ravel()
    if points.size == 0:
        raise MeasureError('root-counting measure of an empty zero set')
    return RootMeasure(points, np.full(points.size, 1.0 / points.size))


def from_poly(p, seed=0):
    """root-counting measure: weight 1/deg on every root, with multiplicity"""
    p = as_poly(p)
    if p.degree() < 1:
        raise MeasureError(
            f'root-counting measure needs degree >= 1, got {p.degree()}'
        )
    return from_roots(poly_roots(p, seed=seed))


def from_pair(pair):
    return from_roots(pair.stieltjes_roots())


def _distances(mu, z):
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    diff = zz[:, None] - mu.points[None, :]
    if np.min(np.abs(diff)) < ON_SUPPORT_ATOL:
        raise OnSupportError()
    return zz, diff


def cauchy(mu, z):
    """C(z) = sum w_j / (z - zeta_j), for a scalar or an array of z"""
    zz, diff = _distances(mu, z)
    value = (mu.weights[None, :] / diff).sum(axis=1)
    if np.ndim(z) == 0:
        return complex(value[0])
    return value


def potential(mu, z):
    """u(z) = sum w_j log|z - zeta_j|"""
    zz, diff = _distances(mu, z)
    value = (mu.weights[None, :] * np.log(np.abs(diff))).sum(axis=1)
    if np.ndim(z) == 0:
        return float(value[0])
    return value


@dataclass
class HullReport:
    eps: float
    max_distance: float
    passed: bool
    violators: list = field(default_factory=list)
    point_count: int = 0

    def to_dict(self):
        return {
            'eps': self.eps,
            'max_distance': self.max_distance,
            'passed': self.passed,
            'point_count': self.point_count,
            'violators': [[float(z.real), float(z.imag)] for z in self.violators],
        }


def _collect_points(items):
    # a list of SpectralPair contributes both Stieltjes and Van Vleck zeros
    if isinstance(items, np.ndarray):
        return items.astype(complex).ravel()
    items = list(items)
    if not items or not hasattr(items[0], 'stieltjes_roots'):
        return np.asarray(items, dtype=complex).ravel()
    chunks = []
    for pair in items:
        chunks.append(np.asarray(pair.stieltjes_roots(), dtype=complex))
        chunks.append(np.asarray(pair.van_vleck_roots(), dtype=complex))
    return np.concatenate(chunks) if chunks else np.zeros(0, dtype=complex)


def hull_check(items, hull_source, eps):
    """
    distance of roots (or of all zeros of a list of pairs) to the convex
    hull of the roots of hull_source; report only
    """
    points = _collect_points(items)
    hull = convex_hull(poly_roots(as_poly(hull_source)))
    if points.size == 0:
        return HullReport(eps=eps, max_distance=0.0, passed=True)
    distance = np.atleast_1d(dist_to_hull(points, hull))
    max_distance = float(distance.max())
    violators = points[distance > eps].tolist()
    if violators:
        logging.info(
            f'hull check: {len(violators)} of {points.size} points beyond eps={eps:g} '
            f'(max distance {max_distance:.3e})'
        )
    return HullReport(
        eps=eps,
        max_distance=max_distance,
        passed=max_distance <= eps,
        violators=violators,
        point_count=int(points.size),
    )


def default_probes(
    Qk,
    count=DEFAULT_PROBE_COUNT,
    radius=None,
    margin=DEFAULT_PROBE_MARGIN,
    standoff=DEFAULT_STANDOFF,
):
    """
    probe points on a circle of radius max|root of Q_k| + margin (or the
    given radius), filtered by distance to the hull of the roots
    """
    zeros = poly_roots(as_poly(Qk))
    if radius is None:
        radius = float(np.max(np.abs(zeros))) + margin
    probes = radius * np.exp(2j * np.pi * np.arange(count) / count)
    distance = np.atleast_1d(dist_to_hull(probes, convex_hull(zeros)))
    kept = probes[distance >= standoff]
    if kept.size < count:
        logging.warning(f'{count - kept.size} of {count} probes dropped by the standoff')
    return kept


@dataclass
class ProbeReport:
    n: int
    probes: list
    max_error: float
    modulus_ratio: list = field(default_factory=list)

    @property
    def median_error(self):
        if not self.probes:
            return float('nan')
        return float(np.median([p[3] for p in self.probes]))

    @property
    def max_modulus_deviation(self):
        if not self.modulus_ratio:
            return float('nan')
        return float(np.max(np.abs(np.asarray(self.modulus_ratio) - 1.0)))

    def to_frame(self):
        columns = ['z_re', 'z_im', 'lhs_re', 'lhs_im', 'rhs_re', 'rhs_im', 'abs_err']
        rows = [
            [z.real, z.imag, lhs.real, lhs.imag, rhs.real, rhs.imag, err]
            for z, lhs, rhs, err in self.probes
        ]
        return pd.DataFrame(rows, columns=columns)

    def to_dict(self):
        return {
            'n': self.n,
            'max_error': self.max_error,
            'median_error': self.median_error,
            'max_modulus_deviation': self.max_modulus_deviation,
            'probe_count': len(self.probes),
        }


def _check_standoff(probes, hull, standoff):
    distance = np.atleast_1d(dist_to_hull(probes, hull))
    close = np.nonzero(distance < standoff)[0]
    if close.size:
        bad = complex(probes[close[0]])
        raise ProbeStandoffError(
            f'probe {bad:.6g} is {distance[close[0]]:.3g} from the hull '
            f'(standoff {standoff:g})',
            probe=bad,
        )


def probe_compare(mu, Vt, Qk, k, probes, standoff=DEFAULT_STANDOFF):
    """
    compare C(z)^k with Vt(z) / monic(Q_k)(z) at the probes

    parameters:
    -----------
    mu: RootMeasure
    Vt: monic Van Vleck limit candidate
    Qk: leading operator coefficient (normalized here)
    k: operator order
    probes: complex points at least standoff away from the hull of Q_k roots
    """
    Vt = as_poly(Vt)
    Qt = as_poly(Qk).monic()
    probes = np.atleast_1d(np.asarray(probes, dtype=complex))
    _check_standoff(probes, convex_hull(poly_roots(Qt)), standoff)
    lhs = cauchy(mu, probes) ** k
    q_values = Qt.eval(probes)
    v_values = Vt.eval(probes)
    rhs = v_values / q_values
    error = np.abs(lhs - rhs)
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.abs(lhs) * np.abs(q_values) / np.abs(v_values)
    report = ProbeReport(
        n=int(mu.size),
        probes=[
            (complex(z), complex(a), complex(b), float(e))
            for z, a, b, e in zip(probes, lhs, rhs, error)
        ],
        max_error=float(error.max()) if error.size else 0.0,
        modulus_ratio=[float(x) for x in ratio],
    )
    logging.debug(f'probe_compare n={report.n}: max error {report.max_error:.3e}')
    return report


def modulus_ratio(mu, Vt, Qk, k, z):
    """|C(z)|^k |monic(Q_k)(z)| / |Vt(z)|, branch free"""
    Qt = as_poly(Qk).monic()
    return np.abs(cauchy(mu, z)) ** k * np.abs(Qt.eval(z)) / np.abs(as_poly(Vt).eval(z))


def _derivative_pair(p, probes):
    p = as_poly(p)
    if p.degree() < 2:
        raise MeasureError(f'derivative comparison needs degree >= 2, got {p.degree()}')
    probes = np.atleast_1d(np.asarray(probes, dtype=complex))
    zeros = poly_roots(p)
    _check_standoff(probes, convex_hull(zeros), DEFAULT_STANDOFF)
    return from_roots(zeros), from_poly(p.derivative()), probes


def derivative_transform_gap(p, probes):
    """max over probes of |C_{p'}(z) - C_p(z)| for the root-counting measures"""
    mu, mu_prime, probes = _derivative_pair(p, probes)
    return float(np.max(np.abs(cauchy(mu_prime, probes) - cauchy(mu, probes))))


def potential_gap(p, probes):
    """max over probes of u_{p'}(z) - u_p(z); report only"""
    mu, mu_prime, probes = _derivative_pair(p, probes)
    return float(np.max(potential(mu_prime, probes) - potential(mu, probes)))


def as_measure(value):
    if isinstance(value, RootMeasure):
        return value
    if isinstance(value, Poly):
        return from_poly(value)
    return from_roots(value)
