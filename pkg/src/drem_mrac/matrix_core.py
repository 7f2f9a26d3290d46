"""Small dense matrix kernels: determinant, adjugate, solve, min eigenvalue.

The numba kernels (``lu_det``, ``adj_mul``, ``lu_solve``, ``jacobi_min_eig``)
take plain float64 arrays and never raise; they are called from the jitted
closed-loop vector field. The public wrappers validate shapes and finiteness
and raise the errors defined here.
"""
import numpy as np
from numba import njit

# module constants; deliberately not configurable
SYMMETRY_TOL = 1e-9
SINGULAR_TOL = 1e-14
JACOBI_TOL = 1e-17
JACOBI_MAX_SWEEPS = 100


class MatrixError(ValueError):
    pass


class DimensionError(MatrixError):
    pass


class SingularMatrixError(MatrixError):
    def __init__(self, pivot, msg=None):
        self.pivot = float(pivot)
        super().__init__(msg or f"matrix is singular to working precision (pivot magnitude {pivot:.3e})")


class SymmetryError(MatrixError):
    pass


@njit(cache=True)
def lu_det(M):
    """Determinant by partial-pivot LU. Returns 0.0 for an exactly zero pivot column."""
    a = M.copy()
    n = a.shape[0]
    d = 1.0
    for c in range(n):
        p = c
        mx = abs(a[c, c])
        for r in range(c + 1, n):
            if abs(a[r, c]) > mx:
                mx = abs(a[r, c])
                p = r
        if mx == 0.0:
            return 0.0
        if p != c:
            for j in range(n):
                tmp = a[c, j]
                a[c, j] = a[p, j]
                a[p, j] = tmp
            d = -d
        d *= a[c, c]
        for r in range(c + 1, n):
            f = a[r, c] / a[c, c]
            for j in range(c + 1, n):
                a[r, j] -= f * a[c, j]
    return d


@njit(cache=True)
def adj_mul(M, R):
    """Return (adj(M) @ R, det(M)) without dividing by det(M).

    Row-reduce [M | R] with partial pivoting to [U | L^-1 P R], then apply
    adj(U) by a scaled back substitution. adj(U) entries are products of
    diagonal pivots, so the result is a polynomial in the entries of M and
    stays finite and exact-in-form for singular M. Forming adj(M) first and
    multiplying afterwards loses roughly the square of the condition number
    on nearly singular Gramians; this ordering keeps the error near that of
    a backward-stable solve.
    """
    n = M.shape[0]
    k = R.shape[1]
    a = M.copy()
    w = R.copy()
    sign = 1.0
    for c in range(n):
        p = c
        mx = abs(a[c, c])
        for r in range(c + 1, n):
            if abs(a[r, c]) > mx:
                mx = abs(a[r, c])
                p = r
        if p != c:
            for j in range(n):
                tmp = a[c, j]
                a[c, j] = a[p, j]
                a[p, j] = tmp
            for j in range(k):
                tmp = w[c, j]
                w[c, j] = w[p, j]
                w[p, j] = tmp
            sign = -sign
        if mx != 0.0:
            for r in range(c + 1, n):
                f = a[r, c] / a[c, c]
                a[r, c] = 0.0
                for j in range(c + 1, n):
                    a[r, j] -= f * a[c, j]
                for j in range(k):
                    w[r, j] -= f * w[c, j]
        else:
            for r in range(c + 1, n):
                a[r, c] = 0.0
    # y = adj(U) w, up to the leading-diagonal factor applied below
    y = np.zeros((n, k))
    for i in range(n - 1, -1, -1):
        tail = 1.0
        for jj in range(i + 1, n):
            tail *= a[jj, jj]
        for col in range(k):
            acc = tail * w[i, col]
            pp = 1.0
            for j in range(i + 1, n):
                acc -= a[i, j] * pp * y[j, col]
                pp *= a[j, j]
            y[i, col] = acc
    det = sign
    head = sign
    for i in range(n):
        for col in range(k):
            y[i, col] *= head
        head *= a[i, i]
        det *= a[i, i]
    return y, det


@njit(cache=True)
def lu_solve(A, B):
    """Solve A X = B with partial pivoting. Returns (X, smallest |pivot|)."""
    n = A.shape[0]
    k = B.shape[1]
    a = A.copy()
    w = B.copy()
    minpiv = np.inf
    for c in range(n):
        p = c
        mx = abs(a[c, c])
        for r in range(c + 1, n):
            if abs(a[r, c]) > mx:
                mx = abs(a[r, c])
                p = r
        if mx < minpiv:
            minpiv = mx
        if mx == 0.0:
            return np.zeros((n, k)), 0.0
        if p != c:
            for j in range(n):
                tmp = a[c, j]
                a[c, j] = a[p, j]
                a[p, j] = tmp
            for j in range(k):
                tmp = w[c, j]
                w[c, j] = w[p, j]
                w[p, j] = tmp
        for r in range(c + 1, n):
            f = a[r, c] / a[c, c]
            for j in range(c + 1, n):
                a[r, j] -= f * a[c, j]
            for j in range(k):
                w[r, j] -= f * w[c, j]
    X = np.zeros((n, k))
    for i in range(n - 1, -1, -1):
        for col in range(k):
            acc = w[i, col]
            for j in range(i + 1, n):
                acc -= a[i, j] * X[j, col]
            X[i, col] = acc / a[i, i]
    return X, minpiv


@njit(cache=True)
def jacobi_min_eig(M):
    """Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations."""
    a = 0.5 * (M + M.T)
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            scale += a[i, j] * a[i, j]
    if scale == 0.0:
        return 0.0
    for sweep in range(JACOBI_MAX_SWEEPS):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if off <= JACOBI_TOL * JACOBI_TOL * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for r in range(n):
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = c * arp - s * arq
                    a[r, q] = s * arp + c * arq
                for r in range(n):
                    apr = a[p, r]
                    aqr = a[q, r]
                    a[p, r] = c * apr - s * aqr
                    a[q, r] = s * apr + c * aqr
    lam = a[0, 0]
    for i in range(1, n):
        if a[i, i] < lam:
            lam = a[i, i]
    return lam


def _as_matrix(m, name="matrix"):
    a = np.array(m, dtype=float)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"{name} must be a non-empty 2-D array, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise MatrixError(f"{name} has non-finite entries")
    return a


def _as_square(m, name="matrix"):
    a = _as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"{name} must be square, got {a.shape[0]}x{a.shape[1]}")
    return a


def determinant(m):
    a = _as_square(m)
    n = a.shape[0]
    if n == 1:
        return float(a[0, 0])
    if n == 2:
        return float(a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0])
    return float(lu_det(a))


def adjugate(m):
    """adj(m), finite for singular input; adj of a 1x1 matrix is [[1]]."""
    a = _as_square(m)
    n = a.shape[0]
    if n == 1:
        return np.ones((1, 1))
    if n == 2:
        return np.array([[a[1, 1], -a[0, 1]], [-a[1, 0], a[0, 0]]])
    return adj_mul(a, np.eye(n))[0]


def adjugate_product(m, r):
    """Return (adj(m) @ r, det(m)) in one pass; see ``adj_mul``."""
    a = _as_square(m)
    b = _as_matrix(r, "right-hand side")
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"row mismatch: matrix is {a.shape[0]}x{a.shape[0]}, right-hand side has {b.shape[0]} rows")
    y, d = adj_mul(a, b)
    return y, float(d)


def solve(a, b):
    A = _as_square(a, "a")
    vec = np.ndim(b) == 1
    B = _as_matrix(b, "b")
    if B.shape[0] != A.shape[0]:
        raise DimensionError(f"b has {B.shape[0]} rows, a is {A.shape[0]}x{A.shape[0]}")
    X, piv = lu_solve(A, B)
    if piv <= SINGULAR_TOL * max(np.abs(A).max(), np.finfo(float).tiny):
        raise SingularMatrixError(piv)
    return X[:, 0] if vec else X


def check_symmetric(m, name="matrix"):
    a = _as_square(m, name)
    asym = np.abs(a - a.T).max()
    if asym > SYMMETRY_TOL * max(np.linalg.norm(a), 1e-300):
        raise SymmetryError(f"{name} is not symmetric (max |m - m^T| = {asym:.3e})")
    return a


def min_eig_sym(m):
    return float(jacobi_min_eig(check_symmetric(m)))
