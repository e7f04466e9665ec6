"""Top eigenpairs of ``A p = lam (B + alpha diag(c) + ridge I) p``.

The right-hand matrix is factored as ``L L^T`` and the problem reduced to the
symmetric eigenproblem of ``L^{-1} A L^{-T}``, so no explicit inverse is
formed and the eigenvalues are real by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import DimensionMismatchError, NotPositiveDefiniteError

MAX_EIGVECS = 2
RIDGE_FACTOR = 1e-9


@dataclass(frozen=True, eq=False)
class GeigSolution:
    """Leading solutions, best first.

    Attributes
    ----------
    eigenvectors : ndarray of shape (k, N)
        Unit Euclidean norm, largest-magnitude entry positive.
    eigenvalues : ndarray of shape (k,)
        Descending.
    residuals : ndarray of shape (k,)
        Stationarity residual ``||A p - lam B* p||``.
    """

    eigenvectors: np.ndarray
    eigenvalues: np.ndarray
    residuals: np.ndarray

    @property
    def k(self) -> int:
        return self.eigenvalues.shape[0]


def sign_convention(vectors: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude entry is positive.

    Ties go to the lowest index (``argmax`` returns the first maximum).
    """
    vectors = np.atleast_2d(np.array(vectors, dtype=np.float64))
    pivot = np.argmax(np.abs(vectors), axis=1)
    signs = np.where(vectors[np.arange(vectors.shape[0]), pivot] < 0, -1.0, 1.0)
    return vectors * signs[:, None]


def regularized_metric(B, c_diag, alpha: float, ridge: float) -> np.ndarray:
    """``B + alpha diag(c) + ridge I``."""
    B = np.asarray(B, dtype=np.float64)
    c_diag = np.asarray(c_diag, dtype=np.float64)
    out = B.copy()
    out[np.diag_indices_from(out)] += alpha * c_diag + ridge
    return out


def default_ridge(B, c_diag=None, alpha: float = 0.0) -> float:
    """``1e-9 * trace(B + alpha C) / N``, falling back to ``1e-9`` for a zero trace."""
    B = np.asarray(B, dtype=np.float64)
    tr = np.trace(B)
    if c_diag is not None:
        tr += alpha * np.sum(c_diag)
    ridge = RIDGE_FACTOR * tr / B.shape[0]
    return float(ridge) if ridge > 0 else RIDGE_FACTOR


def _check_dims(A, B, c_diag, p=None):
    n = A.shape[0]
    if A.shape != (n, n) or B.shape != (n, n):
        raise DimensionMismatchError(f"A {A.shape} and B {B.shape} must be square and equal")
    if c_diag.shape != (n,):
        raise DimensionMismatchError(f"penalty diagonal has shape {c_diag.shape}, need ({n},)")
    if p is not None and p.shape != (n,):
        raise DimensionMismatchError(f"vector has shape {p.shape}, need ({n},)")


def kkt_residual(p, lam, A, B, c_diag, alpha, ridge) -> float:
    """``||A p - lam (B + alpha C + ridge I) p||_2``.

    Zero exactly when ``p`` is a stationary point of the Lagrangian of the
    penalized, ``B``-anchored program with multiplier ``lam``.
    """
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    c_diag = np.asarray(c_diag, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    _check_dims(A, B, c_diag, p)
    r = A @ p - lam * (B @ p + (alpha * c_diag + ridge) * p)
    return float(np.linalg.norm(r))


def top_k_geig(A, B, c_diag, alpha: float = 0.0, ridge: float = 0.0, k: int = 1) -> GeigSolution:
    """Solve for the ``k`` most separable pooling rows.

    Parameters
    ----------
    A, B : ndarray of shape (N, N)
        Symmetric positive semi-definite between/within scatter.
    c_diag : ndarray of shape (N,)
        Non-negative penalty diagonal.
    alpha : float
        Penalty coefficient.
    ridge : float
        Added to the diagonal so the metric stays positive definite.
    k : {1, 2}

    Raises
    ------
    NotPositiveDefiniteError
        If ``B + alpha C + ridge I`` cannot be Cholesky-factored.
    """
    if k not in (1, 2):
        raise ValueError(f"k must be 1 or {MAX_EIGVECS}, got {k}")
    if alpha < 0 or ridge < 0:
        raise ValueError("alpha and ridge must be non-negative")
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    c_diag = np.asarray(c_diag, dtype=np.float64)
    _check_dims(A, B, c_diag)
    n = A.shape[0]
    if k > n:
        raise DimensionMismatchError(f"cannot take {k} eigenvectors of a {n}x{n} problem")

    metric = regularized_metric(B, c_diag, alpha, ridge)
    try:
        L = linalg.cholesky(metric, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise NotPositiveDefiniteError(f"B + alpha C + ridge I is not positive definite: {exc}")

    # whitened = L^{-1} A L^{-T}
    half = linalg.solve_triangular(L, A, lower=True)
    whitened = linalg.solve_triangular(L, half.T, lower=True)
    whitened = 0.5 * (whitened + whitened.T)
    w, u = linalg.eigh(whitened, subset_by_index=[n - k, n - 1])
    w = w[::-1]
    u = u[:, ::-1]
    vecs = linalg.solve_triangular(L.T, u, lower=False).T
    vecs /= np.linalg.norm(vecs, axis=1, keepdims=True)
    vecs = sign_convention(vecs)

    residuals = np.array([kkt_residual(v, lam, A, B, c_diag, alpha, ridge) for v, lam in zip(vecs, w)])
    return GeigSolution(eigenvectors=vecs, eigenvalues=w, residuals=residuals)
