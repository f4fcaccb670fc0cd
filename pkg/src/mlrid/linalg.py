"""Small dense symmetric linear algebra.

Everything here is sized for the regressor dimension of a single stream
(d <= 32), so the kernels are plain loops compiled with numba rather than
calls into LAPACK.
"""
import numpy as np
from numba import njit

MAX_SWEEPS = 100


class NotPositiveDefinite(np.linalg.LinAlgError):
    pass


class JacobiNoConvergence(np.linalg.LinAlgError):
    pass


def _as_vector(v):
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a vector, got shape {v.shape}")
    return v


def _as_square(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    return M


def sym(A):
    """Return (A + A^T) / 2."""
    A = np.asarray(A, dtype=np.float64)
    return 0.5 * (A + A.T)


def is_symmetric(M, atol=1e-12):
    M = _as_square(M)
    return bool(np.max(np.abs(M - M.T), initial=0.0) <= atol)


@njit(cache=True)
def _quad(M, v):
    d = v.shape[0]
    acc = 0.0
    for i in range(d):
        row = 0.0
        for j in range(d):
            row += M[i, j] * v[j]
        acc += v[i] * row
    return acc


def quad_form(M, v):
    """v^T M v."""
    M = _as_square(M)
    v = _as_vector(v)
    if M.shape[0] != v.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {M.shape}, vector {v.shape}")
    return float(_quad(M, v))


@njit(cache=True)
def _off_norm(A):
    d = A.shape[0]
    s = 0.0
    for i in range(d):
        for j in range(d):
            if i != j:
                s += A[i, j] * A[i, j]
    return np.sqrt(s)


@njit(cache=True)
def _jacobi(A, tol, max_sweeps):
    # cyclic row-by-row sweeps; A is overwritten
    d = A.shape[0]
    scale = 0.0
    for i in range(d):
        for j in range(d):
            scale += A[i, j] * A[i, j]
    scale = np.sqrt(scale)
    threshold = tol * scale if scale > 0.0 else tol
    off = _off_norm(A)
    sweeps = 0
    while off > threshold:
        if sweeps == max_sweeps:
            return sweeps, off
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                app = A[p, p]
                aqq = A[q, q]
                theta = (aqq - app) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + np.sqrt(1.0 + theta * theta))
                else:
                    t = -1.0 / (-theta + np.sqrt(1.0 + theta * theta))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(d):
                    if k != p and k != q:
                        akp = A[k, p]
                        akq = A[k, q]
                        A[k, p] = c * akp - s * akq
                        A[p, k] = A[k, p]
                        A[k, q] = s * akp + c * akq
                        A[q, k] = A[k, q]
                A[p, p] = app - t * apq
                A[q, q] = aqq + t * apq
                A[p, q] = 0.0
                A[q, p] = 0.0
        sweeps += 1
        off = _off_norm(A)
    return sweeps, off


def sym_eigvals(M, tol=1e-14, max_sweeps=MAX_SWEEPS):
    """Eigenvalues of a symmetric matrix in ascending order.

    Cyclic Jacobi rotations are applied until the Frobenius norm of the
    off-diagonal part drops below ``tol * ||M||_F``.
    """
    M = _as_square(M)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    A = sym(M).copy()
    sweeps, off = _jacobi(A, tol, max_sweeps)
    scale = np.linalg.norm(M)
    if off > tol * (scale if scale > 0 else 1.0):
        raise JacobiNoConvergence(
            f"Jacobi did not converge in {max_sweeps} sweeps (off-diagonal residual {off:.3e})"
        )
    return np.sort(np.diag(A))


@njit(cache=True)
def _cholesky(M, L):
    d = M.shape[0]
    for j in range(d):
        s = M[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return j
        L[j, j] = np.sqrt(s)
        for i in range(j + 1, d):
            t = M[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / L[j, j]
    return -1


@njit(cache=True)
def _cho_solve(L, b):
    d = L.shape[0]
    x = np.empty(d)
    for i in range(d):
        t = b[i]
        for k in range(i):
            t -= L[i, k] * x[k]
        x[i] = t / L[i, i]
    for i in range(d - 1, -1, -1):
        t = x[i]
        for k in range(i + 1, d):
            t -= L[k, i] * x[k]
        x[i] = t / L[i, i]
    return x


def cholesky(M):
    """Lower-triangular L with L L^T = M."""
    M = _as_square(M)
    L = np.zeros_like(M)
    bad = _cholesky(sym(M), L)
    if bad >= 0:
        raise NotPositiveDefinite(f"matrix is not SPD (non-positive pivot at index {bad})")
    return L


def solve_spd(M, b):
    """Solve M x = b for symmetric positive definite M.

    Cholesky factorisation followed by one step of iterative refinement with
    the residual formed in extended precision; this keeps ``||Mx - b||`` near
    1e-10 ``||b||`` up to condition numbers of about 1e6.
    """
    M = _as_square(M)
    b = _as_vector(b)
    if M.shape[0] != b.shape[0]:
        raise ValueError(f"dimension mismatch: matrix {M.shape}, vector {b.shape}")
    L = cholesky(M)
    x = _cho_solve(L, b)
    ld = np.longdouble
    resid = (b.astype(ld) - M.astype(ld) @ x.astype(ld)).astype(np.float64)
    return x + _cho_solve(L, resid)


def inv_spd(M):
    """Inverse of an SPD matrix, column by column through one factorization."""
    L = cholesky(M)
    d = L.shape[0]
    eye = np.eye(d)
    return sym(np.column_stack([_cho_solve(L, eye[:, i]) for i in range(d)]))


def is_spd(M):
    try:
        cholesky(M)
    except NotPositiveDefinite:
        return False
    return True
