"""
Cluster statistics, scatter matrices and their tall factors.

All scatter matrices use the 1/N convention::

    S_w = 1/N  sum_c sum_{n in c} (x_n - mu_c)(x_n - mu_c)^T
    S_b = sum_c N_c/N (mu_c - mu)(mu_c - mu)^T
    S_t = 1/N  sum_n (x_n - mu)(x_n - mu)^T  = S_w + S_b

and each has a factor ``H`` with ``H.T @ H = S``.  Labels may come in any
order; cluster membership is derived from the label vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .numerics import check_finite, reduced_svd


@dataclass(frozen=True)
class Dataset:
    """N x D sample matrix with one cluster id in ``0..n_clusters-1`` per row.

    ``class_of_cluster`` optionally maps each cluster to the original class
    it was carved from (see :func:`ldapp.cluster.subclass_partition`).
    """

    X: np.ndarray
    labels: np.ndarray
    n_clusters: int
    class_of_cluster: np.ndarray | None = None
    class_names: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise ValidationError(f"X must be N x D, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise ValidationError("X contains non-finite values")
        labels = np.asarray(self.labels)
        if labels.shape != (X.shape[0],):
            raise ValidationError(
                f"expected {X.shape[0]} labels, got shape {labels.shape}"
            )
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ValidationError("labels must be integers")
        labels = labels.astype(np.int64)
        C = int(self.n_clusters)
        if C < 1:
            raise ValidationError("need at least one cluster")
        if labels.size and (labels.min() < 0 or labels.max() >= C):
            raise ValidationError(f"labels must lie in 0..{C - 1}")
        counts = np.bincount(labels, minlength=C)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise ValidationError(f"cluster {int(empty[0])} has no samples")
        coc = self.class_of_cluster
        if coc is not None:
            coc = np.asarray(coc, dtype=np.int64)
            if coc.shape != (C,):
                raise ValidationError("class_of_cluster needs one entry per cluster")
        X.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "n_clusters", C)
        object.__setattr__(self, "class_of_cluster", coc)

    @classmethod
    def from_labels(cls, X, labels, **kwargs) -> "Dataset":
        """Build a dataset from arbitrary hashable labels (ids by first appearance)."""
        ids, uniques = _encode_first_appearance(labels)
        return cls(X, ids, len(uniques), class_names=tuple(uniques), **kwargs)

    @property
    def N(self) -> int:
        return self.X.shape[0]

    @property
    def D(self) -> int:
        return self.X.shape[1]

    @property
    def classes(self) -> np.ndarray:
        """Per-sample class ids (cluster ids when no provenance is attached)."""
        if self.class_of_cluster is None:
            return self.labels
        return self.class_of_cluster[self.labels]

    def subset(self, idx) -> "Dataset":
        """Rows ``idx``, with clusters that vanish dropped and ids compacted."""
        idx = np.asarray(idx)
        labels = self.labels[idx]
        present = np.unique(labels)
        remap = np.full(self.n_clusters, -1, dtype=np.int64)
        remap[present] = np.arange(present.size)
        coc = self.class_of_cluster
        if coc is None:
            coc = np.arange(self.n_clusters)
        return Dataset(
            self.X[idx], remap[labels], present.size,
            class_of_cluster=coc[present], class_names=self.class_names,
        )


def _encode_first_appearance(values):
    ids = np.empty(len(values), dtype=np.int64)
    seen: dict = {}
    for i, v in enumerate(values):
        if v not in seen:
            seen[v] = len(seen)
        ids[i] = seen[v]
    return ids, list(seen)


@dataclass(frozen=True)
class ClusterStats:
    """Counts, means and prototype matrices of a clustered dataset.

    ``M`` is D x C with column c equal to ``mu_c - mu``; ``M_hat`` drops the
    column ``dropped`` and ``Q_hat``/``N_hat`` are defined relative to it.
    """

    counts: np.ndarray
    mu: np.ndarray
    mu_c: np.ndarray
    M: np.ndarray
    dropped: int
    M_hat: np.ndarray
    Q: np.ndarray
    Q_hat: np.ndarray
    N_hat: np.ndarray

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @property
    def C(self) -> int:
        return self.counts.size

    @property
    def Q_tilde(self) -> np.ndarray:
        """``Q_hat + (N_dropped / N) N_hat N_hat^T`` so that ``S_b = M_hat Q_tilde M_hat^T``."""
        return self.Q_hat + (self.counts[self.dropped] / self.N) * np.outer(
            self.N_hat, self.N_hat
        )


@dataclass(frozen=True)
class ScatterSet:
    S_w: np.ndarray
    S_b: np.ndarray
    S_t: np.ndarray


@dataclass(frozen=True)
class FactorSet:
    """Tall factors: ``H_w`` (N x D), ``H_b`` (C x D), ``H_t`` (N x D)."""

    H_w: np.ndarray
    H_b: np.ndarray
    H_t: np.ndarray


def compute_cluster_stats(d: Dataset, dropped: int | None = None) -> ClusterStats:
    """Means, prototype matrix ``M`` and the weight matrices of ``d``.

    ``dropped`` selects the cluster omitted from ``M_hat`` (default: last).
    """
    C = d.n_clusters
    if dropped is None:
        dropped = C - 1
    if not 0 <= dropped < C:
        raise ValidationError(f"dropped cluster {dropped} out of range 0..{C - 1}")
    counts = np.bincount(d.labels, minlength=C)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise ValidationError(f"cluster {int(empty[0])} has no samples")
    N = d.N
    with np.errstate(over="ignore", invalid="ignore"):
        mu = d.X.mean(axis=0)
        mu_c = np.vstack([d.X[d.labels == c].mean(axis=0) for c in range(C)])
    check_finite(mu, mu_c)
    M = (mu_c - mu).T
    keep = [c for c in range(C) if c != dropped]
    frac = counts / N
    return ClusterStats(
        counts=counts,
        mu=mu,
        mu_c=mu_c,
        M=M,
        dropped=dropped,
        M_hat=M[:, keep],
        Q=np.diag(frac),
        Q_hat=np.diag(frac[keep]),
        N_hat=counts[keep] / counts[dropped],
    )


def _gram(H: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        S = H.T @ H
        S = (S + S.T) / 2
    check_finite(S)
    return S


def compute_factors(d: Dataset, s: ClusterStats | None = None) -> FactorSet:
    if s is None:
        s = compute_cluster_stats(d)
    root_n = np.sqrt(d.N)
    with np.errstate(over="ignore", invalid="ignore"):
        H_w = (d.X - s.mu_c[d.labels]) / root_n
        H_b = np.sqrt(s.counts / d.N)[:, None] * (s.mu_c - s.mu)
        H_t = (d.X - s.mu) / root_n
    check_finite(H_w, H_b, H_t)
    return FactorSet(H_w, H_b, H_t)


def compute_scatter(d: Dataset, s: ClusterStats | None = None) -> ScatterSet:
    f = compute_factors(d, s)
    return ScatterSet(_gram(f.H_w), _gram(f.H_b), _gram(f.H_t))


@dataclass(frozen=True)
class FactoredScatter:
    """``S + lam I`` described through the range of a factor ``H`` of ``S``.

    ``V`` holds the right singular vectors of ``H`` with squared singular
    values ``sq`` (the nonzero eigenvalues of ``S``).  The inverse is exact:
    ``V diag(1/(sq+lam)) V^T + (I - V V^T)/lam`` for ``lam > 0``; the
    pseudoinverse ``V diag(1/sq) V^T`` for ``lam == 0``.
    """

    V: np.ndarray
    sq: np.ndarray
    lam: float

    @property
    def dim(self) -> int:
        return self.V.shape[0]

    @property
    def range_values(self) -> np.ndarray:
        """Eigenvalues of the regularized scatter on ``range(V)``."""
        return self.sq + self.lam

    def apply_inverse(self, B) -> np.ndarray:
        B = np.asarray(B, dtype=float)
        VtB = self.V.T @ B
        out = self.V @ (VtB / self.range_values[:, None] if B.ndim == 2
                        else VtB / self.range_values)
        if self.lam > 0:
            out = out + (B - self.V @ VtB) / self.lam
        return out

    def inverse(self) -> np.ndarray:
        return self.apply_inverse(np.eye(self.dim))

    def matrix(self) -> np.ndarray:
        return (self.V * self.sq) @ self.V.T + self.lam * np.eye(self.dim)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ValidationError(f"regularization must be a nonnegative number, got {lam}")
    return lam


def regularize(s: ScatterSet | FactorSet, lam: float, which: str = "t", rtol=None):
    """Add ``lam * I`` to the total (``which='t'``) or within (``'w'``) scatter.

    A :class:`ScatterSet` comes back as a new ScatterSet with the chosen
    matrix shifted.  A :class:`FactorSet` comes back as a
    :class:`FactoredScatter` for the chosen factor, which supports exact
    inversion of the shifted matrix without forming it.
    """
    lam = _check_lambda(lam)
    if which not in ("t", "w"):
        raise ValidationError(f"which must be 't' or 'w', got {which!r}")
    if isinstance(s, ScatterSet):
        if lam == 0:
            return s
        eye = lam * np.eye(s.S_t.shape[0])
        if which == "t":
            return ScatterSet(s.S_w, s.S_b, s.S_t + eye)
        return ScatterSet(s.S_w + eye, s.S_b, s.S_t)
    if isinstance(s, FactorSet):
        H = s.H_t if which == "t" else s.H_w
        return factored(H, lam, rtol)
    raise ValidationError(f"cannot regularize {type(s).__name__}")


def factored(H, lam: float = 0.0, rtol=None) -> FactoredScatter:
    """:class:`FactoredScatter` for ``H.T @ H + lam I``."""
    lam = _check_lambda(lam)
    svd = reduced_svd(H, rtol)
    return FactoredScatter(svd.V, svd.sigma**2, lam)
