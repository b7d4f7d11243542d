"""Small dense-matrix helpers used by the bandwidth selectors.

Everything here runs in float64 regardless of the engine precision: these
are O(d^3) setup costs on d <= 16 matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import MAX_DIM, Dataset
from .errors import (
    DataError,
    InsufficientSamplesError,
    LengthMismatchError,
    NotPositiveDefiniteError,
    SingularCovarianceError,
    SingularMatrixError,
)

SINGULAR_RTOL = 1e-12
PD_TOL = 1e-12


def _square(M) -> np.ndarray:
    A = np.asarray(M, dtype=np.float64)
    if A.ndim == 0:
        A = A.reshape(1, 1)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DataError(f"expected a non-empty square matrix, got shape {A.shape}")
    if A.shape[0] > MAX_DIM:
        raise DataError(f"matrix order {A.shape[0]} exceeds the supported maximum {MAX_DIM}")
    if not np.all(np.isfinite(A)):
        raise DataError("matrix has non-finite entries")
    return A


def check_dimension(d: int) -> None:
    if d > MAX_DIM:
        raise DataError(f"dimensionality {d} exceeds the supported maximum {MAX_DIM}")


def covariance(X: Dataset) -> np.ndarray:
    """Unbiased sample covariance (divisor ``n - 1``) of the columns of ``X``.

    Each pair of dimensions is computed once and mirrored, so the result is
    exactly symmetric.
    """
    check_dimension(X.d)
    n = X.n
    if n < 2:
        raise InsufficientSamplesError(f"covariance needs n >= 2 samples, got {n}")
    data = X.data
    # centred form; algebraically the raw sum-of-products formula but stable
    centred = data - data.mean(axis=1, keepdims=True)
    d = X.d
    sigma = np.empty((d, d))
    for a in range(d):
        for b in range(a + 1):
            v = float(np.dot(centred[a], centred[b])) / (n - 1)
            sigma[a, b] = v
            sigma[b, a] = v
    return sigma


def _lu_det(A: np.ndarray) -> float:
    # Doolittle elimination with partial pivoting
    U = A.copy()
    d = U.shape[0]
    det = 1.0
    for col in range(d):
        piv = col + int(np.argmax(np.abs(U[col:, col])))
        if U[piv, col] == 0.0:
            return 0.0
        if piv != col:
            U[[col, piv]] = U[[piv, col]]
            det = -det
        det *= U[col, col]
        if col + 1 < d:
            factors = U[col + 1:, col] / U[col, col]
            U[col + 1:, col:] -= np.outer(factors, U[col, col:])
    return float(det)


def determinant(M) -> float:
    """Determinant via LU decomposition with partial pivoting."""
    return _lu_det(_square(M))


def _scale(A: np.ndarray) -> float:
    return float(np.max(np.abs(A)))


def is_singular(M) -> bool:
    A = _square(M)
    s = _scale(A)
    if s == 0.0:
        return True
    return abs(_lu_det(A)) <= SINGULAR_RTOL * s ** A.shape[0]


def inverse(M) -> np.ndarray:
    """Matrix inverse.

    Raises :class:`SingularMatrixError` when ``|det(M)| <= 1e-12 * s**d``
    where ``s`` is the largest absolute entry of ``M``.
    """
    A = _square(M)
    if is_singular(A):
        raise SingularMatrixError("matrix is singular to working precision")
    inv = np.linalg.solve(A, np.eye(A.shape[0]))
    if np.array_equal(A, A.T):
        inv = 0.5 * (inv + inv.T)
    return inv


def sqrt_spd(M) -> np.ndarray:
    """Symmetric square root of a symmetric positive-definite matrix.

    Uses the eigendecomposition ``M = V diag(w) V^T`` and returns
    ``V diag(sqrt(w)) V^T``.
    """
    A = _square(M)
    A = 0.5 * (A + A.T)
    w, V = np.linalg.eigh(A)
    if np.any(w <= PD_TOL * _scale(A)):
        raise NotPositiveDefiniteError(f"eigenvalues {w} are not all positive")
    S = (V * np.sqrt(w)) @ V.T
    return 0.5 * (S + S.T)


def vech(M) -> np.ndarray:
    """Stack the lower triangle of ``M`` column by column.

    >>> vech([[1, 4, 7], [2, 5, 8], [3, 6, 9]]).tolist()
    [1.0, 2.0, 3.0, 5.0, 6.0, 9.0]
    """
    A = _square(M)
    d = A.shape[0]
    return np.concatenate([A[c:, c] for c in range(d)])


def unvech(v, d: int) -> np.ndarray:
    """Inverse of :func:`vech`: rebuild the symmetric ``d x d`` matrix."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if d < 1 or v.size != d * (d + 1) // 2:
        raise LengthMismatchError(f"vech of order {d} needs {d * (d + 1) // 2} values, got {v.size}")
    M = np.empty((d, d))
    pos = 0
    for c in range(d):
        m = d - c
        M[c:, c] = v[pos:pos + m]
        M[c, c:] = v[pos:pos + m]
        pos += m
    return M


def is_positive_definite(M) -> bool:
    """True iff a Cholesky factorization succeeds with every pivot > tolerance."""
    A = np.asarray(M, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or not np.all(np.isfinite(A)):
        return False
    d = A.shape[0]
    if d == 0:
        return False
    tol = PD_TOL * float(np.max(np.abs(A)))
    if tol == 0.0:
        return False
    L = np.zeros_like(A)
    for j in range(d):
        pivot = A[j, j] - np.dot(L[j, :j], L[j, :j])
        if not pivot > tol:
            return False
        L[j, j] = np.sqrt(pivot)
        for i in range(j + 1, d):
            L[i, j] = (A[i, j] - np.dot(L[i, :j], L[j, :j])) / L[j, j]
    return True


@dataclass(frozen=True)
class CovarianceSummary:
    """Covariance matrix together with its determinant and inverse."""

    sigma: np.ndarray
    det: float
    inv: np.ndarray

    @classmethod
    def of(cls, X: Dataset) -> "CovarianceSummary":
        sigma = covariance(X)
        det = determinant(sigma)
        try:
            inv = inverse(sigma)
        except SingularMatrixError:
            raise SingularCovarianceError("covariance matrix is singular") from None
        if det <= 0.0:
            raise SingularCovarianceError(f"covariance determinant {det} is not positive")
        return cls(sigma, det, inv)
