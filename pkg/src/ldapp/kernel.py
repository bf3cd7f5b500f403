"""
Kernel LDA.

Two trainers share one model type:

``fit_classical``
    eigen-decompose ``K = U G U^T``, solve ``U^T W U b = l b`` and map back
    with ``a = U G^+ b`` (C-1 features).
``fit_ldapp``
    ``a_c = K^+ e_c`` for every cluster indicator ``e_c`` (C features); no
    eigensystem beyond the decomposition of ``K``.

``W`` is the block projection with entries ``1/N_c`` inside cluster c.
By default the kernel matrix is double-centered (and test kernels centered
consistently), which is what the kernel eigenproblem assumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .numerics import default_rtol, sym_eig
from .scatter import Dataset
from .solvers import feature_objective

KINDS = ("gaussian", "linear", "polynomial")


@dataclass(frozen=True)
class KernelDescriptor:
    """Kernel function and centering flag.

    gaussian:   ``exp(-||x - z||^2 / sigma^2)``
    linear:     ``x . z``  (with centering: ``(x - mu) . (z - mu)``)
    polynomial: ``(x . z + coef)^degree``
    """

    kind: str = "gaussian"
    sigma: float = 1.0
    degree: int = 2
    coef: float = 1.0
    center: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown kernel {self.kind!r}; choose from {KINDS}")
        if self.kind == "gaussian" and not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValidationError(f"gaussian sigma must be positive, got {self.sigma}")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise ValidationError(f"polynomial degree must be a positive integer, got {self.degree}")

    @classmethod
    def parse(cls, text: str, center: bool = True) -> "KernelDescriptor":
        """Parse ``gaussian:SIGMA``, ``linear``, ``linear_centered`` or ``polynomial:DEG[:COEF]``."""
        parts = text.split(":")
        kind = parts[0]
        try:
            if kind == "gaussian":
                if len(parts) != 2:
                    raise ValidationError("expected gaussian:SIGMA")
                return cls("gaussian", sigma=float(parts[1]), center=center)
            if kind in ("linear", "linear_centered"):
                return cls("linear", center=center or kind == "linear_centered")
            if kind == "polynomial":
                coef = float(parts[2]) if len(parts) > 2 else 1.0
                return cls("polynomial", degree=int(parts[1]), coef=coef, center=center)
        except (IndexError, ValueError) as exc:
            raise ValidationError(f"cannot parse kernel {text!r}: {exc}") from None
        raise ValidationError(f"unknown kernel {text!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sigma": self.sigma, "degree": self.degree,
                "coef": self.coef, "center": self.center}


@dataclass(frozen=True)
class KernelModel:
    """Expansion coefficients over the retained training rows.

    A feature of a point ``x`` is ``sum_n alphas[n, f] k~(x, x_n)`` where
    ``k~`` is the (optionally centered) kernel.  ``k_col_means`` and
    ``k_mean`` hold the training kernel statistics needed for centering.
    """

    alphas: np.ndarray
    X_train: np.ndarray
    descriptor: KernelDescriptor
    normalized: bool
    eigenvalues: np.ndarray
    solver: str
    k_col_means: np.ndarray
    k_mean: float
    n_clusters: int

    @property
    def F(self) -> int:
        return self.alphas.shape[1]


def kernel_matrix(desc: KernelDescriptor, X_a, X_b=None) -> np.ndarray:
    """Uncentered kernel values ``K[i, j] = k(a_i, b_j)``."""
    X_a = np.atleast_2d(np.asarray(X_a, dtype=float))
    same = X_b is None
    X_b = X_a if same else np.atleast_2d(np.asarray(X_b, dtype=float))
    if X_a.shape[1] != X_b.shape[1]:
        raise ValidationError(f"widths differ: {X_a.shape[1]} vs {X_b.shape[1]}")
    G = X_a @ X_b.T
    if desc.kind == "linear":
        K = G
    elif desc.kind == "polynomial":
        K = (G + desc.coef) ** int(desc.degree)
    else:
        na = np.einsum("ij,ij->i", X_a, X_a)
        nb = na if same else np.einsum("ij,ij->i", X_b, X_b)
        sq = np.maximum(na[:, None] + nb[None, :] - 2 * G, 0.0)
        if same:
            np.fill_diagonal(sq, 0.0)
        K = np.exp(-sq / desc.sigma**2)
    if same:
        K = (K + K.T) / 2
    return K


def w_matrix(d: Dataset) -> np.ndarray:
    """N x N block projection ``W[i, j] = 1/N_c`` when i and j share cluster c."""
    counts = np.bincount(d.labels, minlength=d.n_clusters)
    same = d.labels[:, None] == d.labels[None, :]
    return np.where(same, 1.0 / counts[d.labels][:, None], 0.0)


def _indicators(d: Dataset, center: bool = False) -> np.ndarray:
    E = np.zeros((d.N, d.n_clusters))
    E[np.arange(d.N), d.labels] = 1.0
    if center:
        # the constant vector spans the null space of a centered kernel
        E -= E.mean(axis=0)
    return E


def _center_stats(K: np.ndarray):
    col = K.mean(axis=0)
    return col, float(col.mean())


def _centered(K: np.ndarray, col: np.ndarray, total: float) -> np.ndarray:
    Kc = K - col[None, :] - col[:, None] + total
    return (Kc + Kc.T) / 2


def _decompose(K: np.ndarray, rtol):
    eig = sym_eig(K)
    if rtol is None:
        rtol = default_rtol(K.shape)
    top = eig.values[0] if eig.values.size else 0.0
    r = int(np.sum(eig.values > rtol * top)) if top > 0 else 0
    return eig.vectors[:, :r], eig.values[:r]


def normalize_alphas(alphas: np.ndarray, K: np.ndarray) -> np.ndarray:
    """Scale each column so that ``a^T K a = 1``; zero-norm columns are left alone."""
    norms = np.einsum("nf,nm,mf->f", alphas, K, alphas)
    scale = np.where(norms > 0, 1.0 / np.sqrt(np.where(norms > 0, norms, 1.0)), 1.0)
    return alphas * scale


def _prepare(d: Dataset, desc: KernelDescriptor):
    K = kernel_matrix(desc, d.X)
    if desc.center:
        col, total = _center_stats(K)
        K = _centered(K, col, total)
    else:
        col, total = np.zeros(d.N), 0.0
    return K, col, total


def fit_classical(d: Dataset, desc: KernelDescriptor, normalize: bool = True,
                  rtol=None) -> KernelModel:
    """Classical kernel LDA with C-1 features via ``U^T W U b = l b``."""
    K, col, total = _prepare(d, desc)
    U, gamma = _decompose(K, rtol)
    E = _indicators(d)
    UE = U.T @ _indicators(d, desc.center)
    counts = E.sum(axis=0)
    core = (UE / counts) @ UE.T
    inner = sym_eig(core)
    k = max(min(d.n_clusters - 1, inner.values.size), 0)
    alphas = U @ (inner.vectors[:, :k] / gamma[:, None])
    if normalize:
        alphas = normalize_alphas(alphas, K)
    return KernelModel(alphas, d.X, desc, normalize, inner.values[:k].copy(),
                       "kernel-classical", col, total, d.n_clusters)


def fit_ldapp(d: Dataset, desc: KernelDescriptor, normalize: bool = True,
              rtol=None) -> KernelModel:
    """Kernel LDA++: ``a_c = K^+ e_c`` for each cluster, C features.

    ``eigenvalues`` records, per feature, the generalized Rayleigh quotient
    ``a^T K W K a / a^T K K a``; it is 1 whenever ``K a`` reproduces the
    (centered) indicator exactly, as for strictly positive definite kernels.
    """
    K, col, total = _prepare(d, desc)
    U, gamma = _decompose(K, rtol)
    E = _indicators(d)
    alphas = U @ ((U.T @ _indicators(d, desc.center)) / gamma[:, None])
    beta = K @ alphas
    counts = E.sum(axis=0)
    EB = E.T @ beta
    num = np.sum(EB**2 / counts[:, None], axis=0)
    den = np.sum(beta**2, axis=0)
    eigenvalues = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    if normalize:
        alphas = normalize_alphas(alphas, K)
    return KernelModel(alphas, d.X, desc, normalize, eigenvalues,
                       "kernel-lda++", col, total, d.n_clusters)


KERNEL_FITTERS = {"classical": fit_classical, "lda++": fit_ldapp}


def kernel_transform(m: KernelModel, X_new) -> np.ndarray:
    """Features of new rows: centered ``k(X_new, X_train) @ alphas``."""
    X_new = np.atleast_2d(np.asarray(X_new, dtype=float))
    if X_new.shape[1] != m.X_train.shape[1]:
        raise ValidationError(
            f"query has {X_new.shape[1]} columns, model expects {m.X_train.shape[1]}"
        )
    Kx = kernel_matrix(m.descriptor, X_new, m.X_train)
    if m.descriptor.center:
        Kx = Kx - Kx.mean(axis=1, keepdims=True) - m.k_col_means[None, :] + m.k_mean
    return Kx @ m.alphas


def kernel_objective(m: KernelModel, d: Dataset) -> float:
    """LDA objective of the kernel features of the training data."""
    return feature_objective(kernel_transform(m, d.X), d)
