"""
Dense linear algebra with explicit rank tolerances.

Every solver in the package goes through these helpers so that the
treatment of "numerically zero" singular values and eigenvalues is the
same everywhere.  Cutoffs are relative to the largest singular value
(or eigenvalue); the default relative cutoff is ``1e-12 * max(m, n)``.

Singular vectors and eigenvectors are sign-canonicalized: the entry of
largest magnitude in each right singular vector (or eigenvector) is made
positive.  This makes fitted models, exported filters and model files
reproducible bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError, ValidationError


def default_rtol(shape: tuple[int, ...]) -> float:
    """Default relative rank cutoff for a matrix of the given shape."""
    return 1e-12 * max(max(shape), 1)


def _as_matrix(A, name="A") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2:
        raise ValidationError(f"{name} must be a 2-D matrix, got ndim={A.ndim}")
    if not np.all(np.isfinite(A)):
        raise ValidationError(f"{name} contains non-finite values")
    return A


def _canonical_signs(V: np.ndarray) -> np.ndarray:
    """Signs (+1/-1) making the largest-magnitude entry of each column positive."""
    if V.shape[0] == 0 or V.shape[1] == 0:
        return np.ones(V.shape[1])
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return signs


@dataclass(frozen=True)
class SvdResult:
    """Reduced SVD ``A ~= U @ diag(sigma) @ V.T`` keeping ``rank`` components."""

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    rank: int


@dataclass(frozen=True)
class EigResult:
    """Eigenpairs of a symmetric matrix, values sorted nonincreasing."""

    vectors: np.ndarray
    values: np.ndarray


def reduced_svd(A, rtol: float | None = None) -> SvdResult:
    """Reduced SVD truncated to singular values above ``rtol * sigma_max``.

    Parameters
    ----------
    A : (m, n) array_like
    rtol : float, optional
        Relative cutoff; defaults to ``default_rtol(A.shape)``.

    Returns
    -------
    SvdResult
        ``U`` is m x r, ``V`` is n x r, ``sigma`` has length r.
    """
    A = _as_matrix(A)
    if rtol is None:
        rtol = default_rtol(A.shape)
    m, n = A.shape
    if m == 0 or n == 0:
        return SvdResult(np.zeros((m, 0)), np.zeros(0), np.zeros((n, 0)), 0)
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    smax = s[0] if s.size else 0.0
    r = int(np.sum(s > rtol * smax)) if smax > 0 else 0
    U = U[:, :r]
    V = Vt[:r].T
    signs = _canonical_signs(V)
    return SvdResult(U * signs, s[:r].copy(), V * signs, r)


def pseudo_inverse(A, rtol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse with a relative singular-value cutoff."""
    A = _as_matrix(A)
    svd = reduced_svd(A, rtol)
    if svd.rank == 0:
        return np.zeros((A.shape[1], A.shape[0]))
    return (svd.V / svd.sigma) @ svd.U.T


def sym_eig(A, symmetry_tol: float = 1e-8) -> EigResult:
    """Eigendecomposition of a symmetric matrix.

    The input is symmetrized as ``(A + A.T) / 2`` after checking that the
    asymmetry is below ``symmetry_tol * max|A|``.  Eigenvalues come back
    nonincreasing; ties keep their original (ascending-solver) order.
    """
    A = _as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise ValidationError(f"sym_eig needs a square matrix, got {A.shape}")
    scale = np.max(np.abs(A)) if A.size else 0.0
    asym = np.max(np.abs(A - A.T)) if A.size else 0.0
    if asym > symmetry_tol * scale:
        raise ValidationError(
            f"matrix is not symmetric: max|A - A.T| = {asym:.3e} "
            f"exceeds {symmetry_tol:g} * max|A| = {symmetry_tol * scale:.3e}"
        )
    values, vectors = np.linalg.eigh((A + A.T) / 2)
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    vectors = vectors * _canonical_signs(vectors)
    return EigResult(vectors, values)


def sym_sqrt(A) -> np.ndarray:
    """Principal square root of a symmetric PSD matrix."""
    eig = sym_eig(A)
    vals = np.clip(eig.values, 0.0, None)
    return (eig.vectors * np.sqrt(vals)) @ eig.vectors.T


def least_squares_minnorm(A, B, rtol: float | None = None) -> np.ndarray:
    """Minimal-norm least-squares solution of ``A X = B``.

    Equivalent to ``pseudo_inverse(A, rtol) @ B``, computed via LAPACK's
    ``gelsd`` with the same relative cutoff.
    """
    A = _as_matrix(A)
    B = np.asarray(B, dtype=float)
    vector_rhs = B.ndim == 1
    B = _as_matrix(B, "B")
    if A.shape[0] != B.shape[0]:
        raise ValidationError(f"incompatible shapes {A.shape} and {B.shape}")
    if rtol is None:
        rtol = default_rtol(A.shape)
    if A.size == 0 or not np.any(A):
        X = np.zeros((A.shape[1], B.shape[1]))
    else:
        X = np.linalg.lstsq(A, B, rcond=rtol)[0]
    return X[:, 0] if vector_rhs else X


def orthonormal_basis(A, rtol: float | None = None) -> np.ndarray:
    """Orthonormal basis of ``range(A)`` via thin QR.

    Raises
    ------
    ValidationError
        If ``A`` does not have full column rank within ``rtol``.
    """
    A = _as_matrix(A)
    if rtol is None:
        rtol = default_rtol(A.shape)
    n = A.shape[1]
    if n == 0:
        return np.zeros((A.shape[0], 0))
    s = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(s > rtol * s[0])) if s[0] > 0 else 0
    if rank < n or A.shape[0] < n:
        raise ValidationError(
            f"matrix with {n} columns is rank deficient (numerical rank {rank})"
        )
    Q, R = np.linalg.qr(A)
    # make diag(R) positive so the basis is a deterministic function of A
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def principal_angles(A, B, rtol: float | None = None) -> np.ndarray:
    """Cosines of the principal angles between ``range(A)`` and ``range(B)``.

    Both inputs must have full column rank and the same number of
    columns.  Cosines are returned nonincreasing and clipped to [0, 1].
    """
    A = _as_matrix(A)
    B = _as_matrix(B, "B")
    if A.shape[1] != B.shape[1]:
        raise ValidationError(
            f"column counts differ: {A.shape[1]} vs {B.shape[1]}"
        )
    if A.shape[0] != B.shape[0]:
        raise ValidationError(f"ambient dimensions differ: {A.shape[0]} vs {B.shape[0]}")
    Qa = orthonormal_basis(A, rtol)
    Qb = orthonormal_basis(B, rtol)
    cos = np.linalg.svd(Qa.T @ Qb, compute_uv=False)
    return np.clip(cos, 0.0, 1.0)


def condition_number(A) -> float:
    """2-norm condition number; ``inf`` for singular or empty matrices."""
    A = _as_matrix(A)
    if A.size == 0:
        return np.inf
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] == 0 or min(A.shape) < max(A.shape):
        return np.inf
    return float(s[0] / s[-1])


def check_finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NumericalError("non-finite values encountered")
