"""
Van Vleck / Stieltjes pairs: solutions (V, S) of T S + V S = 0

Two representations of S are used. Enumeration works on monomial
coefficients (the operator is a Hessenberg matrix there). Refinement and
degree continuation work on the zeros of S directly, where the problem
stays well conditioned at large degree.
"""

import logging
from dataclasses import dataclass, field
from math import comb, factorial

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment
from scipy.sparse.csgraph import minimum_spanning_tree
from scipy.spatial.distance import pdist, squareform

from . import linalg
from .errors import (
    EigenConvergenceError,
    InverseIterationError,
    OperatorError,
    ResonanceError,
    RootFindingError,
    SingularMatrixError,
    SpectralError,
    UnsupportedEnumerationError,
)
from .lame_operator import leading_balance, validate
from .poly import Poly, as_poly, roots as poly_roots

ACCEPT_RESIDUAL = 1e-8
NEWTON_RESIDUAL = 1e-12
ROOT_RESIDUAL = 1e-10
LEADING_S_RTOL = 1e-8
CLUSTER_RTOL = 1e-6
RESONANCE_RTOL = 1e-10
EPS_RADIUS = 1e-12


@dataclass
class SpectralPair:
    n: int
    V: Poly
    S: Poly
    residual: float
    normalized_V: Poly
    roots: np.ndarray = None
    root_residual: float = float('nan')
    basis: str = 'coefficients'
    notes: list = field(default_factory=list)

    @property
    def b(self):
        """free (constant) Van Vleck coefficient"""
        return self.V.coeff(0)

    def van_vleck_roots(self):
        if self.V.degree() < 1:
            return np.zeros(0, dtype=complex)
        return poly_roots(self.normalized_V)

    def stieltjes_roots(self):
        if self.roots is not None:
            return self.roots
        if self.S.degree() < 1:
            return np.zeros(0, dtype=complex)
        return poly_roots(self.S)

    def to_dict(self):
        return {
            'n': self.n,
            'V': self.V.to_json(),
            'S': self.S.to_json(),
            'normalized_V': self.normalized_V.to_json(),
            'residual': self.residual,
            'root_residual': self.root_residual,
            'basis': self.basis,
            'roots': None
            if self.roots is None
            else {
                're': [float(x) for x in np.real(self.roots)],
                'im': [float(x) for x in np.imag(self.roots)],
            },
            'notes': list(self.notes),
        }


@dataclass
class SpectrumReport:
    n: int
    pairs: list
    expected_count: int
    defect_notes: list = field(default_factory=list)
    operator: dict = None

    @property
    def found_count(self):
        return len(self.pairs)

    def to_dict(self):
        return {
            'operator': self.operator,
            'n': self.n,
            'expected_count': self.expected_count,
            'found_count': self.found_count,
            'defect_notes': list(self.defect_notes),
            'pairs': [p.to_dict() for p in self.pairs],
        }

    def to_frame(self):
        """one row per (pair, root); kind is S or V"""
        rows = []
        for index, pair in enumerate(self.pairs):
            b = pair.b
            for kind, points in (
                ('S', pair.stieltjes_roots()),
                ('V', pair.van_vleck_roots()),
            ):
                for root_index, z in enumerate(points):
                    rows.append(
                        {
                            'n': self.n,
                            'pair': index,
                            'b_re': b.real,
                            'b_im': b.imag,
                            'residual': pair.residual,
                            'kind': kind,
                            'root': root_index,
                            'root_re': z.real,
                            'root_im': z.imag,
                        }
                    )
        columns = [
            'n', 'pair', 'b_re', 'b_im', 'residual', 'kind', 'root', 'root_re', 'root_im'
        ]
        return pd.DataFrame(rows, columns=columns)


def _padded(coeffs, size):
    out = np.zeros(size, dtype=complex)
    c = np.asarray(coeffs, dtype=complex)[:size]
    out[: c.size] = c
    return out


def _require_nondegenerate(op):
    record = validate(op)
    if not record.nondegenerate:
        raise OperatorError(
            f'solvers refuse this operator: {"; ".join(record.errors)}'
        )
    return record


def system_residual(op, s, v):
    """
    coefficients of (T + Q_0) S + V S and the row-wise magnitude of the
    terms that produced them
    """
    n = s.size - 1
    r = op.r
    rows = n + r + 1
    M = op.matrix(n, rows)
    v = _padded(v, r + 1)
    R = M @ s + np.convolve(v, s)[:rows]
    scale = np.abs(M) @ np.abs(s) + np.convolve(np.abs(v), np.abs(s))[:rows]
    return R, scale


def pair_residual(op, S, V):
    """relative residual max |R_m| / max_m sum |terms_m|"""
    S = as_poly(S)
    s = S.coeffs
    R, scale = system_residual(op, s, as_poly(V).coeffs)
    denom = float(np.max(scale, initial=0.0))
    if denom == 0:
        return 0.0
    return float(np.max(np.abs(R)) / denom)


def make_pair(op, n, S, V, notes=None):
    S = as_poly(S)
    V = as_poly(V)
    return SpectralPair(
        n=n,
        V=V,
        S=S,
        residual=pair_residual(op, S, V),
        normalized_V=V.monic() if not V.is_zero() else Poly(),
        notes=list(notes or []),
    )


def newton_refine(op, pair, max_iter=20):
    """
    Newton on coefficients 0..n+r-1 of T S + V S with S monic and the
    leading Van Vleck coefficient fixed to the leading balance
    """
    n = pair.n
    r = op.r
    a = leading_balance(op, n)
    notes = list(pair.notes)
    if pair.residual > 1e-2:
        logging.warning(
            f'newton_refine at n={n}: start residual {pair.residual:.2e} is outside the basin'
        )
        notes.append(f'newton: start residual {pair.residual:.2e} above 1e-2')
    s = _padded(pair.S.coeffs, n + 1)
    s = s / s[n]
    v = _padded(pair.V.coeffs, r + 1)
    v[r] = a
    M = op.matrix(n, n + r + 1)
    size = n + r

    best = (pair_residual(op, Poly(s), Poly(v)), s.copy(), v.copy())
    converged = best[0] <= NEWTON_RESIDUAL
    iteration = 0
    while not converged and iteration < max_iter:
        iteration += 1
        R, scale = system_residual(op, s, v)
        F = R[:size]
        J = np.zeros((size, size), dtype=complex)
        v_long = _padded(v, n + r + 1)
        s_long = _padded(s, n + r + 1)
        for j in range(n):
            J[:, j] = (M[:, j] + np.roll(v_long, j))[:size]
        for i in range(r):
            J[:, n + i] = np.roll(s_long, i)[:size]
        row_scale = np.where(scale[:size] > 0, scale[:size], 1.0)
        try:
            delta = linalg.lu_solve(J / row_scale[:, None], -F / row_scale)
        except SingularMatrixError:
            notes.append('defective/multiple spectral point: singular Newton Jacobian')
            logging.warning(f'newton_refine at n={n}: singular Jacobian')
            break
        s_new = s.copy()
        s_new[:n] += delta[:n]
        v_new = v.copy()
        v_new[:r] += delta[n:]
        res = pair_residual(op, Poly(s_new), Poly(v_new))
        logging.debug(f'newton_refine n={n} iteration {iteration}: residual {res:.3e}')
        if not np.isfinite(res) or res >= best[0]:
            # no further progress at rounding level
            break
        s, v = s_new, v_new
        best = (res, s.copy(), v.copy())
        converged = res <= NEWTON_RESIDUAL

    residual, s, v = best
    notes.append(
        f'newton: {"converged" if converged else "best iterate"} after {iteration} iterations'
    )
    refined = make_pair(op, n, Poly(s), Poly(v), notes)
    refined.residual = residual
    refined.roots = pair.roots
    refined.root_residual = pair.root_residual
    refined.basis = pair.basis
    return refined


def _elementary(W, order):
    """e_0..e_order of each row of W via Newton's identities"""
    n = W.shape[0]
    E = [np.ones(n, dtype=W.dtype)]
    P = [None]
    power = np.ones_like(W)
    for m in range(1, order + 1):
        power = power * W
        P.append(power.sum(axis=1))
    for m in range(1, order + 1):
        total = np.zeros(n, dtype=W.dtype)
        for i in range(1, m + 1):
            total = total + (-1) ** (i - 1) * E[m - i] * P[i]
        E.append(total / m)
    return E


def root_system(op, z, jacobian=True):
    """
    equations F_j = sum_{i=1..k} i! Q_i(z_j) e_{i-1}(w_j) = 0 with
    w_j = (1/(z_j - z_l))_{l != j}, their scales and Jacobian
    """
    z = np.asarray(z, dtype=complex)
    n = z.size
    k = op.k
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    W = 1.0 / diff
    np.fill_diagonal(W, 0.0)
    E = _elementary(W, k - 1)
    E_abs = _elementary(np.abs(W), k - 1)
    Qz = [None]
    for i in range(1, k + 1):
        Qz.append(op.q[i].eval(z) if not op.q[i].is_zero() else np.zeros(n, complex))
    F = np.zeros(n, dtype=complex)
    scale = np.zeros(n)
    for i in range(1, k + 1):
        F += factorial(i) * Qz[i] * E[i - 1]
        scale += factorial(i) * np.abs(Qz[i]) * E_abs[i - 1].real
    if not jacobian:
        return F, scale, None
    G = np.zeros((n, n), dtype=complex)
    diag = np.zeros(n, dtype=complex)
    for i in range(1, k + 1):
        dq = op.q[i].derivative()
        if not dq.is_zero():
            diag += factorial(i) * dq.eval(z) * E[i - 1]
        m = i - 1
        if m == 0:
            continue
        # e_{m-1} of w_j with w_jl removed
        removed = np.zeros((n, n), dtype=complex)
        power = np.ones((n, n), dtype=complex)
        for t in range(m):
            removed += power * E[m - 1 - t][:, None]
            power = power * (-W)
        G += factorial(i) * Qz[i][:, None] * removed
    W2 = W * W
    J = G * W2
    diag -= np.sum(J, axis=1)
    J[np.diag_indices(n)] = diag
    return F, scale, J


def _relative(F, scale):
    safe = np.where(scale > 0, scale, 1.0)
    return float(np.max(np.abs(F) / safe, initial=0.0))


def _nearest_distance(z):
    if z.size < 2:
        return np.full(z.size, np.inf)
    d = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(d, np.inf)
    return d.min(axis=1)


def refine_root_set(op, z, max_iter=60, tol=1e-14):
    """
    damped Newton on the zeros of S; returns (zeros, relative residual,
    converged flag)
    """
    z = np.array(z, dtype=complex)
    F, scale, J = root_system(op, z)
    res = _relative(F, scale)
    converged = res <= tol
    iteration = 0
    while not converged and iteration < max_iter:
        iteration += 1
        safe = np.where(scale > 0, scale, 1.0)
        try:
            delta = linalg.lu_solve(J / safe[:, None], -F / safe)
        except SingularMatrixError:
            logging.debug('root refinement: singular Jacobian')
            break
        step = np.abs(delta)
        near = _nearest_distance(z)
        with np.errstate(divide='ignore', invalid='ignore'):
            limit = np.where(step > 0, 0.5 * near / step, np.inf)
        t = min(1.0, float(np.min(limit)))
        accepted = False
        for _ in range(12):
            z_try = z + t * delta
            F_try, scale_try, J_try = root_system(op, z_try)
            res_try = _relative(F_try, scale_try)
            if np.isfinite(res_try) and res_try < res:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        small_step = float(np.max(t * step)) <= 4 * np.finfo(float).eps * max(
            1.0, float(np.max(np.abs(z)))
        )
        z, F, scale, J, res = z_try, F_try, scale_try, J_try, res_try
        converged = res <= tol or small_step
    logging.debug(f'root refinement: residual {res:.3e} after {iteration} iterations')
    return z, res, res <= ROOT_RESIDUAL


def recover_van_vleck(op, z):
    """
    V from the zeros of S: V(x) = -sum_i Q_i(x) i! e_i(1/(x - z_l)),
    sampled on a far circle and interpolated at degree r
    """
    z = np.asarray(z, dtype=complex)
    r = op.r
    center = complex(np.mean(z)) if z.size else 0j
    radius = 2.0 * (float(np.max(np.abs(z - center))) if z.size else 1.0) + 1.0
    samples = center + radius * np.exp(2j * np.pi * (np.arange(r + 1) + 0.25) / (r + 1))
    values = np.zeros(r + 1, dtype=complex)
    for t, x in enumerate(samples):
        u = 1.0 / (x - z)
        e = np.zeros(op.k + 1, dtype=complex)
        e[0] = 1.0
        for ul in u:
            e[1:] = e[1:] + ul * e[:-1]
        values[t] = -sum(
            op.q[i].eval(x) * factorial(i) * e[i] for i in range(op.k + 1)
        )
    # interpolate in the shifted variable x - center
    vander = np.vander(samples - center, r + 1, increasing=True)
    shifted = linalg.lu_solve(vander, values)
    # expand back to powers of x
    result = Poly()
    base = Poly([-center, 1.0])
    power = Poly([1.0])
    for coeff in shifted:
        result = result + power.scale(coeff)
        power = power * base
    return result


def refine_roots(op, pair, max_iter=60):
    """root-coordinate refinement of a pair; V re-derived from the zeros"""
    n = pair.n
    notes = list(pair.notes)
    if op.k == 1 or n < 2:
        notes.append('roots: coefficient basis (no root-coordinate refinement)')
        out = _copy_pair(pair, notes=notes)
        if out.roots is None and n >= 1:
            out.roots = _coefficient_roots(pair.S)
        return out
    start = pair.roots if pair.roots is not None else _coefficient_roots(pair.S)
    if _nearest_distance(start).min() < 1e-6 * max(1.0, float(np.max(np.abs(start)))):
        notes.append('roots: clustered zeros, root refinement skipped')
        out = _copy_pair(pair, notes=notes)
        out.roots = start
        return out
    z, res, ok = refine_root_set(op, start, max_iter=max_iter)
    out = _copy_pair(pair, notes=notes)
    if ok:
        out.roots = z[np.lexsort((z.imag, z.real))]
        out.root_residual = res
        out.basis = 'roots'
    else:
        out.roots = start
        out.root_residual = res
        out.notes.append(f'roots: refinement stopped at residual {res:.2e}')
        logging.warning(f'root refinement at n={n} stopped at residual {res:.2e}')
    return out


def _copy_pair(pair, notes=None):
    return SpectralPair(
        n=pair.n,
        V=pair.V,
        S=pair.S,
        residual=pair.residual,
        normalized_V=pair.normalized_V,
        roots=pair.roots,
        root_residual=pair.root_residual,
        basis=pair.basis,
        notes=list(pair.notes if notes is None else notes),
    )


def _coefficient_roots(S, seed=0):
    if S.degree() < 1:
        return np.zeros(0, dtype=complex)
    try:
        return poly_roots(S, seed=seed)
    except RootFindingError as e:
        logging.warning(f'root finding on S of degree {S.degree()}: {e}')
        return np.asarray(e.best)


def pair_from_roots(op, z, notes=None):
    """pair in the root basis: S from its zeros, V recovered from them"""
    z = np.asarray(z, dtype=complex)
    n = z.size
    V = recover_van_vleck(op, z)
    # the leading coefficient is known exactly
    if op.r >= 0 and V.degree() >= 0:
        coeffs = _padded(V.coeffs, op.r + 1)
        coeffs[op.r] = leading_balance(op, n)
        V = Poly(coeffs)
    S = Poly.from_roots(z)
    pair = make_pair(op, n, S, V, notes)
    F, scale, _ = root_system(op, z, jacobian=False)
    pair.roots = z[np.lexsort((z.imag, z.real))]
    pair.root_residual = _relative(F, scale)
    pair.basis = 'roots'
    return pair


def solve_exact(op, n, seed=0):
    """the single pair of an exactly solvable (r = 0) operator at degree n"""
    _require_nondegenerate(op)
    if op.r != 0:
        raise OperatorError(f'solve_exact needs r = 0, got r = {op.r}')
    if n < 0:
        raise ValueError(f'degree must be >= 0, got {n}')
    M = op.matrix(n, n + 1)
    d = np.diag(M).copy()
    lam = d[n]
    for m in range(n):
        if abs(d[m] - lam) <= RESONANCE_RTOL * max(abs(lam), 1.0):
            raise ResonanceError(
                f'resonant diagonal at n={n} (lambda_{m} = lambda_{n}) '
                '; the eigenvector may not exist or be unique'
            )
    s = np.zeros(n + 1, dtype=complex)
    s[n] = 1.0
    for m in range(n - 1, -1, -1):
        s[m] = -(M[m, m + 1:] @ s[m + 1:]) / (d[m] - lam)
    pair = make_pair(op, n, Poly(s), Poly([-lam]))
    if pair.residual > NEWTON_RESIDUAL:
        pair = newton_refine(op, pair)
    pair.roots = _coefficient_roots(pair.S, seed=seed) if n >= 1 else None
    return refine_roots(op, pair)


def _cluster_notes(values):
    notes = []
    used = np.zeros(len(values), dtype=bool)
    for i, b in enumerate(values):
        if used[i]:
            continue
        members = [
            j for j in range(len(values))
            if not used[j] and abs(values[j] - b) <= CLUSTER_RTOL * max(1.0, abs(b))
        ]
        for j in members:
            used[j] = True
        if len(members) > 1:
            notes.append(f'cluster of {len(members)} Van Vleck constants near b={b:.6g}')
    return notes


def _hessenberg_candidate(A, b):
    """fallback S for (A + bI) s = 0 with s_n = 1 by a direct solve"""
    n = A.shape[0] - 1
    shifted = A + b * np.eye(n + 1)
    rhs = -shifted[:n, n]
    head = linalg.lu_solve(shifted[:n, :n], rhs)
    return np.concatenate([head, [1.0]])


def working_frame(op):
    """
    center and radius of a disk holding the zeros of Q_k; the Stieltjes
    zeros lie in their convex hull, so in x = (z - center) / radius they
    sit in the closed unit disk
    """
    zeros = _coefficient_roots(op.leading)
    lo = complex(np.min(zeros.real), np.min(zeros.imag))
    hi = complex(np.max(zeros.real), np.max(zeros.imag))
    center = 0.5 * (lo + hi)
    radius = float(np.max(np.abs(zeros - center)))
    if radius <= EPS_RADIUS * max(1.0, abs(center)):
        radius = 1.0
    return center, radius


def lower_degree_candidate(s):
    """
    True when the eigenvector s (working frame) belongs to a Stieltjes
    polynomial of degree below n: a monic polynomial with all zeros in the
    unit disk has |s_j| <= binom(n, j)
    """
    n = s.size - 1
    weights = np.array([float(comb(n, j)) for j in range(n + 1)])
    return bool(abs(s[n]) < LEADING_S_RTOL * np.max(np.abs(s) / weights))


def _from_working_frame(op, pair, center, radius, seed=0):
    """map a working-frame pair back to z = center + radius x"""
    n = pair.n
    V = pair.V.compose_affine(-center / radius, 1.0 / radius)
    coeffs = _padded(V.coeffs, op.r + 1)
    coeffs[op.r] = leading_balance(op, n)
    S = pair.S.compose_affine(-center / radius, 1.0 / radius).monic()
    out = make_pair(op, n, S, Poly(coeffs), pair.notes)
    out.residual = pair.residual
    out.notes.append(f'residual measured at z = {center:.6g} + {radius:.6g} x')
    x = _coefficient_roots(pair.S, seed=seed)
    out.roots = center + radius * x
    return out


def solve_r1(op, n, seed=0):
    """
    all pairs at degree n for a Fuchs-index-1 operator; the eigenproblem
    and Newton refinement run in the working frame of the zeros of Q_k
    """
    _require_nondegenerate(op)
    if op.r != 1:
        raise OperatorError(f'solve_r1 needs r = 1, got r = {op.r}')
    if n < op.k:
        raise ValueError(f'solve_r1 needs n >= k = {op.k}, got {n}')
    center, radius = working_frame(op)
    work = op.rescaled(center, radius)
    a = leading_balance(work, n)
    M = work.matrix(n, n + 2)
    A = M[: n + 1, :].copy()
    A[np.arange(1, n + 1), np.arange(0, n)] += a
    report = SpectrumReport(
        n=n, pairs=[], expected_count=comb(n + 1, n), operator=op.to_json()
    )
    # b in z is b_x - a_z * center
    offset = leading_balance(op, n) * center
    partial_error = None
    try:
        bs = -linalg.eigenvalues(A)
    except EigenConvergenceError as e:
        logging.error(f'eigensolver failed at n={n}: {e}')
        bs = -np.asarray(e.partial, dtype=complex)
        partial_error = e
    bs = sorted(bs, key=lambda b: (round((b - offset).real, 9), round((b - offset).imag, 9)))
    report.defect_notes.extend(_cluster_notes([b - offset for b in bs]))

    for index, b in enumerate(bs):
        label = f'b={b - offset:.6g}'
        try:
            s = linalg.eigenvector(A, -b, seed=seed + index)
        except InverseIterationError as e:
            logging.warning(f'n={n}, {label}: {e}; falling back to a direct solve')
            try:
                s = _hessenberg_candidate(A, b)
            except SingularMatrixError:
                report.defect_notes.append(f'{label}: no eigenvector recovered')
                continue
        if lower_degree_candidate(s):
            report.defect_notes.append(
                f'{label}: candidate rejected, s_n ~ 0 (lower-degree Stieltjes polynomial)'
            )
            continue
        pair = make_pair(work, n, Poly(s / s[n]), Poly([b, a]))
        pair = newton_refine(work, pair)
        if pair.residual > ACCEPT_RESIDUAL:
            report.defect_notes.append(
                f'{label}: residual {pair.residual:.2e} above {ACCEPT_RESIDUAL:g}'
            )
            logging.warning(f'n={n}: pair {label} rejected, residual {pair.residual:.2e}')
            continue
        pair = _from_working_frame(op, pair, center, radius, seed=seed)
        report.pairs.append(refine_roots(op, pair))

    report.pairs.sort(key=lambda p: (round(p.b.real, 9), round(p.b.imag, 9)))
    for pair in report.pairs:
        if pair.V.degree() != op.r:
            report.defect_notes.append(
                f'b={pair.b:.6g}: deg V = {pair.V.degree()} != r = {op.r}'
            )
    if report.found_count != report.expected_count:
        report.defect_notes.append(
            f'found {report.found_count} of {report.expected_count} pairs at n={n}'
        )
    logging.info(f'n={n}: {report.found_count} of {report.expected_count} pairs accepted')
    if partial_error is not None:
        raise SpectralError(f'eigensolver failure at n={n}: {partial_error}', report=report)
    return report


def enumerate_pairs(op, n, seed=0):
    """dispatch to solve_exact (r = 0) or solve_r1 (r = 1)"""
    _require_nondegenerate(op)
    if op.r == 0:
        pair = solve_exact(op, n, seed=seed)
        return SpectrumReport(
            n=n, pairs=[pair], expected_count=1, operator=op.to_json()
        )
    if op.r == 1:
        return solve_r1(op, n, seed=seed)
    raise UnsupportedEnumerationError(
        'enumeration unsupported for r ≥ 2; use newton_refine with external guesses'
    )


def matching_distance(a, b):
    """max distance between two equal-size point sets under optimal matching"""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.size == 0 and b.size == 0:
        return 0.0
    if a.size != b.size:
        return float('inf')
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(np.max(cost[rows, cols]))


def select_sequence(op, target, n_list, reports=None, seed=0):
    """
    for every n the pair whose normalized Van Vleck polynomial is closest
    to the target (max zero distance under optimal matching)
    """
    target = as_poly(target)
    if target.degree() != op.r:
        raise ValueError(f'target degree {target.degree()} != r = {op.r}')
    target_roots = poly_roots(target.monic()) if op.r >= 1 else np.zeros(0, complex)
    sequence = []
    for n in n_list:
        report = reports.get(n) if reports else None
        if report is None:
            report = enumerate_pairs(op, n, seed=seed)
        if not report.pairs:
            raise SpectralError(f'empty spectrum at n={n}', report=report)
        distances = [
            matching_distance(p.van_vleck_roots(), target_roots) for p in report.pairs
        ]
        best = int(np.argmin(distances))
        logging.debug(f'select_sequence n={n}: pair {best} at distance {distances[best]:.3e}')
        sequence.append(report.pairs[best])
    return sequence


def _mst_edges(z):
    xy = np.column_stack([z.real, z.imag])
    tree = minimum_spanning_tree(squareform(pdist(xy))).tocoo()
    return list(zip(tree.row.tolist(), tree.col.tolist()))


def interlacing_seed(z):
    """
    n+1 starting points from n zeros: midpoints of the minimum spanning
    tree edges plus one point past every leaf, minus the midpoints on the
    shortest edges at junctions
    """
    z = np.asarray(z, dtype=complex)
    n = z.size
    if n == 1:
        return np.array([z[0] - 0.5, z[0] + 0.5])
    edges = _mst_edges(z)
    # coincident points give zero-weight edges that the sparse tree drops
    if len(edges) < n - 1:
        return None
    degree = np.zeros(n, dtype=int)
    neighbour = {}
    for i, j in edges:
        degree[i] += 1
        degree[j] += 1
        neighbour.setdefault(i, []).append(j)
        neighbour.setdefault(j, []).append(i)
    drop = set()
    for node in np.nonzero(degree >= 3)[0]:
        incident = []
        for idx, (i, j) in enumerate(edges):
            if node in (i, j):
                incident.append((abs(z[i] - z[j]), idx))
        incident.sort()
        for _, idx in incident[: degree[node] - 2]:
            drop.add(idx)
    mids = [0.5 * (z[i] + z[j]) for idx, (i, j) in enumerate(edges) if idx not in drop]
    tips = [
        z[leaf] + 0.5 * (z[leaf] - z[neighbour[leaf][0]])
        for leaf in np.nonzero(degree == 1)[0]
    ]
    seed = np.array(mids + tips, dtype=complex)
    if seed.size != n + 1:
        return None
    return seed


def _extension_seed(z):
    z = np.asarray(z, dtype=complex)
    if z.size == 1:
        return np.array([z[0], z[0] + 1.0])
    edges = _mst_edges(z)
    degree = np.zeros(z.size, dtype=int)
    neighbour = {}
    for i, j in edges:
        degree[i] += 1
        degree[j] += 1
        neighbour.setdefault(i, []).append(j)
        neighbour.setdefault(j, []).append(i)
    leaves = np.nonzero(degree == 1)[0]
    if leaves.size == 0:
        leaves = np.array([int(np.argmax(np.abs(z - z.mean())))])
        neighbour.setdefault(int(leaves[0]), [int(np.argmin(np.abs(z - z.mean())))])
    tips = [z[leaf] + 0.5 * (z[leaf] - z[neighbour[leaf][0]]) for leaf in leaves]
    gaps = [float(np.min(np.abs(z - t))) for t in tips]
    return np.concatenate([z, [tips[int(np.argmax(gaps))]]])


def follow_sequence(op, pair, n_target, max_iter=60):
    """
    degree continuation n -> n+1 -> ... -> n_target in root coordinates,
    each step seeded by interlacing

    returns:
    --------
    list of SpectralPair for degrees pair.n + 1 .. n_target
    """
    if op.k < 2:
        raise OperatorError('degree continuation needs k >= 2')
    z = pair.roots if pair.roots is not None else _coefficient_roots(pair.S)
    sequence = []
    for n in range(pair.n + 1, n_target + 1):
        seed = interlacing_seed(z)
        result = None
        for attempt, start in enumerate((seed, _extension_seed(z))):
            if start is None:
                continue
            candidate, res, ok = refine_root_set(op, start, max_iter=max_iter)
            if ok:
                result = candidate
                if attempt > 0:
                    logging.info(f'follow_sequence n={n}: interlacing seed failed, extension seed used')
                break
        if result is None:
            raise SpectralError(f'degree continuation failed at n={n}')
        z = result
        step = pair_from_roots(op, z, notes=[f'continued from n={n - 1}'])
        sequence.append(step)
        logging.debug(f'follow_sequence reached n={n}, root residual {step.root_residual:.2e}')
    if sequence:
        logging.info(f'follow_sequence: {pair.n} -> {n_target} done')
    return sequence
