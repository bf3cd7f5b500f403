"""
k-means subclass partitioning.

LDA here works on clusters rather than classes: each class is split into
``k`` subclasses with seeded k-means++ / Lloyd, and the resulting
:class:`~ldapp.scatter.Dataset` remembers which class every cluster came
from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .scatter import Dataset


@dataclass(frozen=True)
class Partition:
    labels: np.ndarray
    centers: np.ndarray
    inertia: float
    n_iter: int
    inertia_history: tuple[float, ...]
    class_of_cluster: np.ndarray | None = None


def _sq_dists(X, centers):
    # exact differences; the expanded form loses precision for nearby points
    return np.stack([np.einsum("ij,ij->i", X - c, X - c) for c in centers], axis=1)


def _kmeans_pp(X, k, rng):
    N = X.shape[0]
    chosen = [int(rng.integers(N))]
    closest = np.einsum("ij,ij->i", X - X[chosen[0]], X - X[chosen[0]])
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = int(rng.choice(N, p=closest / total))
        else:
            # every point coincides with a chosen center
            rest = np.setdiff1d(np.arange(N), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        closest = np.minimum(closest, np.einsum("ij,ij->i", X - X[idx], X - X[idx]))
    return X[chosen].copy()


def kmeans(X, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-6) -> Partition:
    """Lloyd's algorithm with k-means++ seeding from ``numpy.random.default_rng(seed)``.

    Stops when no center moves more than ``tol`` or after ``max_iter``
    iterations.  A cluster that empties out is reseeded with the point
    farthest from its current center.
    """
    X = np.asarray(X, dtype=float)
    N = X.shape[0]
    if k < 1 or k > N:
        raise ValidationError(f"cannot form {k} clusters from {N} samples")
    if max_iter < 1:
        raise ValidationError("max_iter must be at least 1")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(X, k, rng)
    history = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = _sq_dists(X, centers)
        labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(N), labels].sum()))
        labels = _repair_empty(labels, d2, k)
        new = np.vstack([X[labels == j].mean(axis=0) for j in range(k)])
        shift = np.max(np.sqrt(np.sum((new - centers) ** 2, axis=1)))
        centers = new
        if shift < tol:
            break
    d2 = _sq_dists(X, centers)
    labels = _repair_empty(np.argmin(d2, axis=1), d2, k)
    inertia = float(d2[np.arange(N), labels].sum())
    history.append(inertia)
    return Partition(labels, centers, inertia, n_iter, tuple(history))


def _repair_empty(labels, d2, k):
    labels = labels.copy()
    counts = np.bincount(labels, minlength=k)
    for j in np.flatnonzero(counts == 0):
        own = d2[np.arange(labels.size), labels]
        # only steal from clusters that keep at least one member
        own = np.where(np.bincount(labels, minlength=k)[labels] > 1, own, -np.inf)
        far = int(np.argmax(own))
        labels[far] = j
    return labels


def subclass_partition(X, class_labels, k_per_class, seed: int = 0,
                       max_iter: int = 300, tol: float = 1e-6) -> Dataset:
    """Split every class into k-means subclasses.

    Parameters
    ----------
    X : (N, D) array_like
    class_labels : length-N sequence of class ids in ``0..K-1``
    k_per_class : int or sequence of K ints
    seed : int
        Root seed.  A class is clustered with the child sequence
        ``SeedSequence(seed, spawn_key=(first_row,))`` where ``first_row`` is
        the index of its first sample, so renaming classes does not change
        how any class is split.

    Returns
    -------
    Dataset
        Cluster ids are numbered class by class; ``class_of_cluster`` maps
        them back.
    """
    X = np.asarray(X, dtype=float)
    class_labels = np.asarray(class_labels, dtype=np.int64)
    n_classes = int(class_labels.max()) + 1 if class_labels.size else 0
    if np.ndim(k_per_class) == 0:
        ks = [int(k_per_class)] * n_classes
    else:
        ks = [int(k) for k in k_per_class]
        if len(ks) != n_classes:
            raise ValidationError(f"need one k per class ({n_classes}), got {len(ks)}")
    if any(k < 1 for k in ks):
        raise ValidationError("k_per_class must be at least 1 for every class")
    counts = np.bincount(class_labels, minlength=n_classes)
    short = [(c, int(counts[c]), k) for c, k in enumerate(ks) if counts[c] < k]
    if short:
        detail = ", ".join(f"class {c} has {n} samples < k={k}" for c, n, k in short)
        raise ValidationError(f"not enough samples for requested subclasses: {detail}")
    labels = np.empty(X.shape[0], dtype=np.int64)
    class_of_cluster = []
    offset = 0
    for c in range(n_classes):
        idx = np.flatnonzero(class_labels == c)
        if ks[c] == 1:
            sub = np.zeros(idx.size, dtype=np.int64)
        else:
            child = np.random.SeedSequence(seed, spawn_key=(int(idx[0]),))
            child_seed = int(child.generate_state(1)[0])
            sub = kmeans(X[idx], ks[c], seed=child_seed, max_iter=max_iter, tol=tol).labels
        labels[idx] = sub + offset
        class_of_cluster.extend([c] * ks[c])
        offset += ks[c]
    return Dataset(X, labels, offset, class_of_cluster=np.array(class_of_cluster))
