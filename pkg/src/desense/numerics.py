"""Dense linear-algebra kernels.

Matrices are plain 2-D ``float64`` numpy arrays. Every kernel validates its
inputs (shape, finiteness) and returns a fresh array; none of them mutate
their arguments.
"""

import math

import numba
import numpy as np

from .errors import (
    ConvergenceError,
    DimensionError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    NumericalError,
    SingularSystemError,
)

MAX_SWEEPS = 100
# Above this size sym_eig hands off to LAPACK (dsyevd); Jacobi is O(n^3) per sweep.
JACOBI_MAX_N = 64


def as_matrix(a, name="matrix"):
    """Coerce ``a`` to a finite 2-D float64 array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    if m.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"{name} contains non-finite entries")
    return m


def _check_finite(m, name):
    if not np.all(np.isfinite(m)):
        raise NumericalError(f"{name} produced non-finite entries")
    return m


def _check_square(m, name):
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got {m.shape[0]}x{m.shape[1]}")


def check_symmetric(s, name="matrix", rtol=1e-9):
    _check_square(s, name)
    scale = np.max(np.abs(s)) if s.size else 0.0
    if s.size and np.max(np.abs(s - s.T)) > rtol * scale:
        raise NotSymmetricError(f"{name} is not symmetric")


def matmul(a, b):
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(
            f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}"
        )
    return _check_finite(a @ b, "matmul")


def cholesky(s):
    """Lower-triangular ``L`` with ``L @ L.T == s``.

    Raises NotPositiveDefiniteError when a pivot falls to or below
    ``1e-12 * trace(s) / n``; the failing pivot index is in the message and
    on the exception's ``pivot`` attribute.
    """
    s = as_matrix(s, "S")
    check_symmetric(s, "S")
    n = s.shape[0]
    floor = 1e-12 * np.trace(s) / n if n else 0.0
    low = np.zeros_like(s)
    for j in range(n):
        row = low[j, :j]
        d = s[j, j] - row @ row
        if not d > floor:
            raise NotPositiveDefiniteError(
                f"matrix is not positive definite (pivot {j} = {d:.3e})", pivot=j
            )
        ljj = math.sqrt(d)
        low[j, j] = ljj
        if j + 1 < n:
            low[j + 1 :, j] = (s[j + 1 :, j] - low[j + 1 :, :j] @ row) / ljj
    return low


def solve_triangular(low, b, side="lower"):
    """Solve ``low @ X = b`` (side="lower") or ``low.T @ X = b`` (side="lower-transposed")."""
    low = as_matrix(low, "L")
    squeeze = np.ndim(b) == 1
    b = as_matrix(b, "B")
    _check_square(low, "L")
    n = low.shape[0]
    if b.shape[0] != n:
        raise DimensionError(f"L is {n}x{n} but B has {b.shape[0]} rows")
    diag = np.diag(low)
    if np.any(diag == 0.0):
        i = int(np.flatnonzero(diag == 0.0)[0])
        raise SingularSystemError(f"triangular system is singular (zero diagonal at {i})")

    x = np.zeros_like(b)
    if side == "lower":
        for i in range(n):
            x[i] = (b[i] - low[i, :i] @ x[:i]) / diag[i]
    elif side == "lower-transposed":
        for i in range(n - 1, -1, -1):
            x[i] = (b[i] - low[i + 1 :, i] @ x[i + 1 :]) / diag[i]
    else:
        raise ValueError(f"unknown side {side!r}")
    _check_finite(x, "solve_triangular")
    return x[:, 0] if squeeze else x


@numba.njit(cache=True, nogil=True)
def _jacobi_sweeps(a, v, max_sweeps):
    n = a.shape[0]
    fro = 0.0
    for i in range(n):
        for j in range(n):
            fro += a[i, j] * a[i, j]
    fro = math.sqrt(fro)
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if math.sqrt(2.0 * off) <= 1e-14 * fro or off == 0.0:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                app = a[p, p]
                aqq = a[q, q]
                for r in range(n):
                    arp = a[r, p]
                    arq = a[r, q]
                    a[r, p] = c * arp - s * arq
                    a[r, q] = s * arp + c * arq
                for r in range(n):
                    a[p, r] = a[r, p]
                    a[q, r] = a[r, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(n):
                    vrp = v[r, p]
                    vrq = v[r, q]
                    v[r, p] = c * vrp - s * vrq
                    v[r, q] = s * vrp + c * vrq
    return -1


def jacobi_eig(s, max_sweeps=MAX_SWEEPS):
    """Cyclic Jacobi; returns unsorted ``(eigenvalues, V)``."""
    a = np.array(s, dtype=np.float64, order="C")
    v = np.eye(a.shape[0])
    # power-of-two rescaling is exact and keeps the squared norms from
    # under- or overflowing
    peak = np.abs(a).max(initial=0.0)
    shift = int(np.frexp(peak)[1]) if peak > 0 else 0
    a = np.ldexp(a, -shift)
    if _jacobi_sweeps(a, v, max_sweeps) < 0:
        raise ConvergenceError(f"Jacobi did not converge in {max_sweeps} sweeps")
    return np.ldexp(np.diag(a), shift), v


def fix_signs(v):
    """Flip columns so each one's largest-magnitude entry is positive (first index on ties)."""
    v = v.copy()
    if v.size == 0:
        return v
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.where(v[idx, np.arange(v.shape[1])] < 0, -1.0, 1.0)
    return v * signs


def sym_eig(s, method="auto"):
    """Eigen-decomposition of a symmetric matrix.

    Parameters
    ----------
    s : array-like (n, n)
        Symmetric input.
    method : {"auto", "jacobi", "lapack"}
        "auto" uses Jacobi up to ``JACOBI_MAX_N`` and LAPACK above.

    Returns
    -------
    eigenvalues : ndarray (n,)
        Sorted descending.
    V : ndarray (n, n)
        Orthonormal eigenvectors as columns, sign-normalized by :func:`fix_signs`.
    """
    s = as_matrix(s, "S")
    check_symmetric(s, "S")
    n = s.shape[0]
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_N else "lapack"
    if method == "jacobi":
        w, v = jacobi_eig(s)
    elif method == "lapack":
        try:
            w, v = np.linalg.eigh(s)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"eigh failed: {exc}") from exc
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = fix_signs(v[:, order])
    _check_finite(v, "sym_eig")
    return w, v
