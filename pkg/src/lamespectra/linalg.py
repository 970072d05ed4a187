"""
dense complex linear algebra kernel

matrices are square numpy arrays of complex128; every routine works on
a copy and leaves its input untouched
"""

import logging

import numpy as np

from .errors import (
    EigenConvergenceError,
    InverseIterationError,
    SingularMatrixError,
)

EPS = np.finfo(float).eps
PIVOT_RTOL = 1e-14


def as_matrix(A):
    A = np.array(A, dtype=complex)
    if A.ndim != 2:
        raise ValueError(f'expected a matrix, got an array of shape {A.shape}')
    return A


def _require_square(A):
    if A.shape[0] != A.shape[1]:
        raise ValueError(f'square matrix required, got shape {A.shape}')


def norm_inf(A):
    A = np.asarray(A)
    if A.ndim == 1:
        return float(np.max(np.abs(A), initial=0.0))
    return float(np.max(np.sum(np.abs(A), axis=1), initial=0.0))


def lu_factor(A, pivot_floor=None):
    """
    LU factorization with partial pivoting, PA = LU packed in one array

    parameters:
    -----------
    A: square matrix
    pivot_floor: if given, pivots smaller than this are replaced by it
        instead of raising (used by inverse iteration)

    returns:
    --------
    (lu, perm): packed factors and the row permutation
    """
    lu = as_matrix(A)
    _require_square(lu)
    n = lu.shape[0]
    perm = np.arange(n)
    threshold = PIVOT_RTOL * norm_inf(lu)
    for j in range(n):
        p = j + int(np.argmax(np.abs(lu[j:, j])))
        if p != j:
            lu[[j, p]] = lu[[p, j]]
            perm[[j, p]] = perm[[p, j]]
        pivot = lu[j, j]
        if abs(pivot) <= threshold or pivot == 0:
            if pivot_floor is None:
                raise SingularMatrixError()
            lu[j, j] = pivot_floor if pivot == 0 else pivot_floor * pivot / abs(pivot)
            pivot = lu[j, j]
        if j + 1 < n:
            lu[j + 1:, j] /= pivot
            lu[j + 1:, j + 1:] -= np.outer(lu[j + 1:, j], lu[j, j + 1:])
    return lu, perm


def lu_apply(lu, perm, b):
    y = np.array(b, dtype=complex)[perm]
    n = lu.shape[0]
    for i in range(1, n):
        y[i] -= lu[i, :i] @ y[:i]
    for i in range(n - 1, -1, -1):
        y[i] = (y[i] - lu[i, i + 1:] @ y[i + 1:]) / lu[i, i]
    return y


def lu_solve(A, b):
    """solve Ax = b by LU with partial pivoting; raises SingularMatrixError"""
    lu, perm = lu_factor(A)
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != lu.shape[0]:
        raise ValueError(
            f'right-hand side of length {b.shape[0]} for a {lu.shape[0]}x{lu.shape[0]} matrix'
        )
    return lu_apply(lu, perm, b)


def determinant(A):
    lu, perm = lu_factor(A)
    # parity of the permutation
    visited = np.zeros(perm.size, dtype=bool)
    sign = 1
    for i in range(perm.size):
        if visited[i]:
            continue
        j, length = i, 0
        while not visited[j]:
            visited[j] = True
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign * complex(np.prod(np.diag(lu)))


def balance(A, radix=2.0):
    """
    diagonal similarity B = D^{-1} A D equalizing row and column norms

    returns:
    --------
    (B, d): balanced matrix and the diagonal of D
    """
    B = as_matrix(A)
    _require_square(B)
    n = B.shape[0]
    d = np.ones(n)
    sqrdx = radix * radix
    converged = False
    while not converged:
        converged = True
        for i in range(n):
            c = np.sum(np.abs(B[:, i])) - abs(B[i, i])
            r = np.sum(np.abs(B[i, :])) - abs(B[i, i])
            if c == 0 or r == 0:
                continue
            g = r / radix
            f = 1.0
            s = c + r
            while c < g:
                f *= radix
                c *= sqrdx
            g = r * radix
            while c > g:
                f /= radix
                c /= sqrdx
            if (c + r) / f < 0.95 * s:
                converged = False
                d[i] *= f
                B[i, :] /= f
                B[:, i] *= f
    return B, d


def hessenberg(A):
    """upper Hessenberg form by Householder reflections (unitary similarity)"""
    H = as_matrix(A)
    _require_square(H)
    n = H.shape[0]
    for j in range(n - 2):
        x = H[j + 1:, j]
        alpha = np.linalg.norm(x)
        if alpha == 0 or np.all(x[1:] == 0):
            continue
        phase = x[0] / abs(x[0]) if x[0] != 0 else 1.0
        v = x.copy()
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        H[j + 1:, j:] -= 2.0 * np.outer(v, v.conj() @ H[j + 1:, j:])
        H[:, j + 1:] -= 2.0 * np.outer(H[:, j + 1:] @ v, v.conj())
        H[j + 2:, j] = 0.0
    return H


def _givens(x, y):
    r = np.hypot(abs(x), abs(y))
    if r == 0:
        return 1.0 + 0j, 0j
    return x / r, y / r


def _wilkinson_shift(a, b, c, d):
    # eigenvalue of [[a, b], [c, d]] closest to d
    half = 0.5 * (a - d)
    disc = np.sqrt(half * half + b * c)
    mu1 = d - b * c / (half + disc) if (half + disc) != 0 else d
    mu2 = d - b * c / (half - disc) if (half - disc) != 0 else d
    return mu1 if abs(mu1 - d) <= abs(mu2 - d) else mu2


def hessenberg_qr_eigenvalues(H, max_iter):
    """
    single-shift complex QR with Wilkinson shifts and deflation on an
    upper Hessenberg matrix; eigenvalues only
    """
    H = np.array(H, dtype=complex)
    n = H.shape[0]
    eigs = []
    hi = n - 1
    total = 0
    since_deflation = 0
    scale = max(norm_inf(H), 1e-300)
    while hi >= 0:
        if hi == 0:
            eigs.append(H[0, 0])
            hi -= 1
            continue
        lo = hi
        while lo > 0:
            near = abs(H[lo, lo]) + abs(H[lo - 1, lo - 1])
            if near == 0:
                near = scale
            if abs(H[lo, lo - 1]) <= EPS * near:
                H[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eigs.append(H[hi, hi])
            hi -= 1
            since_deflation = 0
            continue
        total += 1
        since_deflation += 1
        if total > max_iter:
            raise EigenConvergenceError(
                f'QR did not converge after {max_iter} iterations '
                f'({len(eigs)} of {n} eigenvalues found)',
                partial=eigs,
            )
        if since_deflation % 11 == 10:
            # exceptional shift breaks rare cycles
            mu = H[hi, hi] + 1.5 * abs(H[hi, hi - 1])
        else:
            mu = _wilkinson_shift(
                H[hi - 1, hi - 1], H[hi - 1, hi], H[hi, hi - 1], H[hi, hi]
            )
        block = slice(lo, hi + 1)
        H[block, block] -= mu * np.eye(hi - lo + 1)
        rotations = []
        for j in range(lo, hi):
            c, s = _givens(H[j, j], H[j + 1, j])
            rotations.append((c, s))
            row_j = H[j, j:hi + 1].copy()
            row_k = H[j + 1, j:hi + 1].copy()
            H[j, j:hi + 1] = np.conj(c) * row_j + np.conj(s) * row_k
            H[j + 1, j:hi + 1] = -s * row_j + c * row_k
        for j, (c, s) in zip(range(lo, hi), rotations):
            top = min(j + 2, hi) + 1
            col_j = H[lo:top, j].copy()
            col_k = H[lo:top, j + 1].copy()
            H[lo:top, j] = c * col_j + s * col_k
            H[lo:top, j + 1] = -np.conj(s) * col_j + np.conj(c) * col_k
        H[block, block] += mu * np.eye(hi - lo + 1)
    logging.debug(f'QR found {n} eigenvalues in {total} iterations')
    return np.array(eigs[::-1])


def eigenvalues(A):
    """
    all eigenvalues: balance, reduce to Hessenberg, shifted QR with
    deflation; raises EigenConvergenceError after 40 n iterations
    """
    A = as_matrix(A)
    _require_square(A)
    n = A.shape[0]
    if n == 0:
        raise ValueError('eigenvalues of an empty matrix')
    if n == 1:
        return np.array([A[0, 0]])
    B, _ = balance(A)
    norm = norm_inf(B)
    if norm == 0:
        return np.zeros(n, dtype=complex)
    H = hessenberg(B / norm)
    try:
        eigs = hessenberg_qr_eigenvalues(H, max_iter=40 * n)
    except EigenConvergenceError as e:
        raise EigenConvergenceError(
            str(e), partial=[x * norm for x in e.partial]
        ) from e
    return eigs * norm


def eigenvector(A, lam, seed=0, max_iter=5, tol=1e-8):
    """
    unit-norm eigenvector for an approximate eigenvalue lam by inverse
    iteration from a seeded random start
    """
    A = as_matrix(A)
    _require_square(A)
    n = A.shape[0]
    norm = max(norm_inf(A), 1e-300)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    v /= np.linalg.norm(v)
    shifted = A - lam * np.eye(n)
    lu, perm = lu_factor(shifted, pivot_floor=EPS * norm)
    best, best_res = v, np.inf
    for iteration in range(max_iter):
        w = lu_apply(lu, perm, v)
        size = np.linalg.norm(w)
        if not np.isfinite(size) or size == 0:
            break
        v = w / size
        # phase: largest entry real positive
        k = int(np.argmax(np.abs(v)))
        v *= abs(v[k]) / v[k]
        res = norm_inf(A @ v - lam * v)
        if res < best_res:
            best, best_res = v, res
        if res <= tol * norm:
            logging.debug(f'inverse iteration converged in {iteration + 1} steps')
            return v
    raise InverseIterationError(
        f'inverse iteration did not converge for lambda={lam:.6g} '
        f'(residual {best_res:.3e}, norm {norm:.3e})'
    )


def companion(coeffs):
    """companion matrix of an ascending coefficient sequence"""
    c = np.asarray(coeffs, dtype=complex)
    n = c.size - 1
    if n < 1:
        raise ValueError('companion matrix needs degree >= 1')
    C = np.zeros((n, n), dtype=complex)
    C[1:, :-1] = np.eye(n - 1)
    C[:, -1] = -c[:-1] / c[-1]
    return C
