"""
Nearest-neighbour evaluation and k-fold cross-validation.

Accuracies are reported in percent of correctly predicted *classes*: a
test point takes the class of its nearest training neighbour, so cluster
structure only matters through the learned features.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ValidationError
from .kernel import KERNEL_FITTERS, KernelDescriptor, kernel_objective, kernel_transform
from .numerics import orthonormal_basis, principal_angles
from .scatter import Dataset
from .solvers import LdaModel, fit, transform

_CHUNK_ENTRIES = 4_000_000


def nn_classify(train_feats, train_labels, test_feats) -> np.ndarray:
    """1-NN labels under Euclidean distance; ties go to the lowest training index."""
    train = np.atleast_2d(np.asarray(train_feats, dtype=float))
    test = np.atleast_2d(np.asarray(test_feats, dtype=float))
    train_labels = np.asarray(train_labels)
    if train.shape[0] == 0:
        raise ValidationError("nearest-neighbour classification needs training samples")
    if train.shape[1] != test.shape[1]:
        raise ValidationError(f"feature widths differ: {train.shape[1]} vs {test.shape[1]}")
    if train_labels.shape[0] != train.shape[0]:
        raise ValidationError("one label per training row required")
    out = np.empty(test.shape[0], dtype=train_labels.dtype)
    step = max(1, _CHUNK_ENTRIES // max(train.shape[0] * max(train.shape[1], 1), 1))
    for start in range(0, test.shape[0], step):
        block = test[start:start + step]
        # explicit differences; the expanded |a|^2 + |b|^2 - 2ab form cancels badly
        d2 = np.sum((block[:, None, :] - train[None, :, :]) ** 2, axis=2)
        out[start:start + step] = train_labels[np.argmin(d2, axis=1)]
    return out


def kfold_split(N: int, k: int, seed: int = 0, labels=None) -> list[np.ndarray]:
    """Deterministic shuffled k-fold test index sets.

    With ``labels`` the split is stratified: samples are shuffled within
    each label, laid out label by label, and dealt round-robin, so fold
    sizes differ by at most one and so do per-label counts.
    """
    if k < 1 or k > N:
        raise ValidationError(f"cannot split {N} samples into {k} folds")
    rng = np.random.default_rng(seed)
    if labels is None:
        order = rng.permutation(N)
    else:
        labels = np.asarray(labels)
        if labels.shape != (N,):
            raise ValidationError("labels must have one entry per sample")
        order = np.concatenate([
            rng.permutation(np.flatnonzero(labels == c)) for c in np.unique(labels)
        ])
    folds = [np.sort(order[f::k]) for f in range(k)]
    return folds


@dataclass(frozen=True)
class SolverConfig:
    solver: str = "lda++"
    mode: str = "ldlss"
    lam: float = 0.0
    drop: int | None = None
    orthonormalize: bool = False
    rtol: float | None = None

    def fit(self, d: Dataset) -> LdaModel:
        return fit(d, self.solver, self.lam, self.mode, self.rtol, self.drop)


@dataclass(frozen=True)
class KernelConfig:
    descriptor: KernelDescriptor
    trainer: str = "lda++"
    rtol: float | None = None
    orthonormalize: bool = False

    @property
    def solver(self) -> str:
        return f"kernel-{self.trainer}"


@dataclass
class EvalReport:
    solver: str
    seed: int
    folds: int
    stratified: bool
    fold_accuracies: list[float]
    fold_objectives: list[float]
    mean_accuracy: float
    std_accuracy: float
    mean_objective: float
    fold_predictions: list[list[int]] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _accuracy(pred, truth) -> float:
    return 100.0 * float(np.mean(np.asarray(pred) == np.asarray(truth)))


def _linear_features(model: LdaModel, orthonormalize: bool, *blocks):
    if orthonormalize:
        Q = orthonormal_basis(model.A)
        return [(b - model.mean) @ Q for b in blocks]
    return [transform(model, b) for b in blocks]


def _run_fold(d: Dataset, config, classes, test_idx):
    train_idx = np.setdiff1d(np.arange(d.N), test_idx)
    train = d.subset(train_idx)
    if isinstance(config, KernelConfig):
        m = KERNEL_FITTERS[config.trainer](train, config.descriptor, rtol=config.rtol)
        f_train = kernel_transform(m, train.X)
        f_test = kernel_transform(m, d.X[test_idx])
        obj = kernel_objective(m, train)
        if config.orthonormalize:
            f_train, f_test = whiten_features(f_train, f_test)
    else:
        m = config.fit(train)
        f_train, f_test = _linear_features(m, config.orthonormalize, train.X, d.X[test_idx])
        obj = m.objective
    pred = nn_classify(f_train, classes[train_idx], f_test)
    return _accuracy(pred, classes[test_idx]), float(obj), [int(p) for p in pred]


def whiten_features(F_train, *blocks, rtol: float = 1e-10):
    """Map features so the training features become orthonormal columns.

    Uses the thin SVD ``F_train = U S V^T`` restricted to singular values
    above ``rtol * s_max``.  Two feature maps whose training features span
    the same column space give test features that differ by an orthogonal
    matrix, hence identical nearest-neighbour predictions.
    """
    U, s, Vt = np.linalg.svd(np.asarray(F_train, dtype=float), full_matrices=False)
    r = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    T = Vt[:r].T / s[:r]
    return [F_train @ T] + [np.asarray(b) @ T for b in blocks]


def cross_validate(d: Dataset, config: SolverConfig | KernelConfig | None = None,
                   k: int = 10, seed: int = 0, stratified: bool = True,
                   jobs: int = 1) -> EvalReport:
    """k-fold 1-NN accuracy of a solver, with the training-fold objective per fold.

    ``jobs > 1`` runs folds on a thread pool; results are collected in fold
    order, so the report does not depend on ``jobs``.
    """
    if config is None:
        config = SolverConfig()
    classes = d.classes
    folds = kfold_split(d.N, k, seed, classes if stratified else None)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda t: _run_fold(d, config, classes, t), folds))
    else:
        results = [_run_fold(d, config, classes, t) for t in folds]
    accs = [r[0] for r in results]
    objs = [r[1] for r in results]
    preds = [r[2] for r in results]
    cfg = asdict(config) if not isinstance(config, KernelConfig) else {
        "kernel": config.descriptor.to_dict(), "trainer": config.trainer, "rtol": config.rtol,
        "orthonormalize": config.orthonormalize,
    }
    return EvalReport(
        solver=config.solver,
        seed=seed,
        folds=k,
        stratified=stratified,
        fold_accuracies=accs,
        fold_objectives=[float(o) for o in objs],
        mean_accuracy=float(np.mean(accs)),
        std_accuracy=float(np.std(accs)),
        mean_objective=float(np.mean(objs)),
        fold_predictions=preds,
        config=cfg,
    )


@dataclass(frozen=True)
class SubspaceReport:
    cosines: np.ndarray
    accuracy_a: float
    accuracy_b: float
    predictions_equal: bool
    predictions_a: np.ndarray
    predictions_b: np.ndarray


def subspace_equivalence(model_a: LdaModel, model_b: LdaModel, d: Dataset,
                         test_idx, train_idx=None) -> SubspaceReport:
    """Compare two fitted transforms after QR-orthonormalizing their columns.

    Both models must be fitted on ``d[train_idx]`` (default: the complement
    of ``test_idx``) and have equal feature counts.
    """
    if model_a.F != model_b.F:
        raise ValidationError(f"feature counts differ: {model_a.F} vs {model_b.F}")
    test_idx = np.asarray(test_idx)
    if train_idx is None:
        train_idx = np.setdiff1d(np.arange(d.N), test_idx)
    classes = d.classes
    cos = principal_angles(model_a.A, model_b.A)
    preds, accs = [], []
    for m in (model_a, model_b):
        f_train, f_test = _linear_features(m, True, d.X[train_idx], d.X[test_idx])
        p = nn_classify(f_train, classes[train_idx], f_test)
        preds.append(p)
        accs.append(_accuracy(p, classes[test_idx]))
    return SubspaceReport(cos, accs[0], accs[1], bool(np.array_equal(*preds)), preds[0], preds[1])
