"""
Linear LDA solvers and the trace objective.

All solvers maximize ``J(A) = tr{(A^T S_t A)^+ A^T S_b A}``:

``eig_lda``
    classical generalized eigenvectors of ``S_b a = l S_t a`` (C-1 features).
``ldapp``
    the prototype solution ``A = S_t^+ M``, one feature per cluster.
``eig_ldapp``
    ``S_t^+ M Z`` with ``Z`` the eigenbasis of ``Q M^T S_t^+ M``.
``sw_solution``
    ``A = S_w^+ M``, optimal only when ``S_w`` and ``M_hat^T S_w^-1 M_hat``
    are invertible.

Each solver has an ``ldlss`` path that forms D x D scatter matrices and an
``hdsss`` path that works from SVDs of the N x D factors.  Regularization
``lam`` replaces ``S_t`` by ``S_t + lam I`` (``S_w`` for ``sw_solution``),
and the recorded objective is measured against the same shifted total
scatter the solver optimized.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError, ValidationError
from .numerics import (
    condition_number,
    default_rtol,
    least_squares_minnorm,
    pseudo_inverse,
    reduced_svd,
    sym_eig,
    sym_sqrt,
)
from .scatter import (
    ClusterStats,
    Dataset,
    compute_cluster_stats,
    compute_factors,
    compute_scatter,
    factored,
    regularize,
    _check_lambda,
)

SOLVERS = ("eig-lda", "lda++", "eig-lda++", "sw-pinv-m")
MODES = ("ldlss", "hdsss")

# relative eigenvalue floor for a retained discriminant direction
EIG_FLOOR = 1e-10
# condition-number ceiling for the S_w optimality gate
GATE_COND = 1e12


@dataclass(frozen=True)
class LdaModel:
    """A fitted linear transform ``y = A^T (x - mean)``.

    ``gram_t`` and ``gram_b`` are the feature-space scatters ``A^T S_t A``
    and ``A^T S_b A`` at fit time; they make the objective of any column
    subset computable without the training data.
    """

    A: np.ndarray
    mean: np.ndarray
    solver: str
    mode: str
    lam: float
    n_clusters: int
    objective: float
    gram_t: np.ndarray
    gram_b: np.ndarray
    prototype_index: tuple[int, ...] | None = None
    eigenvalues: np.ndarray | None = None
    class_of_cluster: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict, compare=False)

    @property
    def D(self) -> int:
        return self.A.shape[0]

    @property
    def F(self) -> int:
        return self.A.shape[1]

    @property
    def feature_count(self) -> int:
        return self.F


@dataclass(frozen=True)
class BayesWeights:
    """Linear scores ``w_c^T x + b_c`` of the homoscedastic Gaussian Bayes rule."""

    w: np.ndarray
    b: np.ndarray
    priors: np.ndarray

    def scores(self, X) -> np.ndarray:
        return np.atleast_2d(X) @ self.w + self.b

    def rao_scores(self, X) -> np.ndarray:
        """Scores without the log-prior term."""
        return self.scores(X) - np.log(self.priors)

    def predict(self, X) -> np.ndarray:
        return np.argmax(self.scores(X), axis=1)


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")


class _Problem:
    """Scatter information for one dataset, in the representation ``mode`` needs."""

    def __init__(self, d: Dataset, lam: float, mode: str, rtol=None):
        _check_mode(mode)
        self.d = d
        self.lam = _check_lambda(lam)
        self.mode = mode
        self.rtol = rtol
        self.stats = compute_cluster_stats(d)
        self._Ht = None
        if mode == "ldlss":
            self.scatter = regularize(compute_scatter(d, self.stats), self.lam)
            self.factors = None
        else:
            self.scatter = None
            self.factors = compute_factors(d, self.stats)

    @property
    def M(self) -> np.ndarray:
        return self.stats.M

    def total(self):
        """Factored ``S_t + lam I`` (hdsss only; computed once)."""
        if self._Ht is None:
            self._Ht = factored(self.factors.H_t, self.lam, self.rtol)
        return self._Ht

    def grams(self, A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.mode == "ldlss":
            Gt = A.T @ self.scatter.S_t @ A
            Gb = A.T @ self.scatter.S_b @ A
        else:
            HA = self.factors.H_t @ A
            Gt = HA.T @ HA + self.lam * (A.T @ A)
            HbA = self.factors.H_b @ A
            Gb = HbA.T @ HbA
        return (Gt + Gt.T) / 2, (Gb + Gb.T) / 2

    def optimum(self) -> float:
        if self.mode == "ldlss":
            return optimal_objective(self.scatter.S_t, self.scatter.S_b, self.rtol)
        T = self.total()
        Y = (self.factors.H_b @ T.V) / np.sqrt(T.range_values)
        return float(np.sum(Y**2))

    def model(self, A, solver, **kwargs) -> LdaModel:
        Gt, Gb = self.grams(A)
        Qt, Qb = self.grams(_range_basis(A, self.rtol))
        return LdaModel(
            A=A,
            mean=self.stats.mu,
            solver=solver,
            mode=self.mode,
            lam=self.lam,
            n_clusters=self.d.n_clusters,
            objective=_trace_objective(Qt, Qb),
            gram_t=Gt,
            gram_b=Gb,
            class_of_cluster=self.d.class_of_cluster,
            **kwargs,
        )


def _range_basis(A, rtol=None) -> np.ndarray:
    # J depends only on span(A); badly scaled columns would otherwise swamp the pseudoinverse
    if A.size == 0:
        return A
    return reduced_svd(A, rtol).U


def _trace_objective(Gt, Gb, rtol=None) -> float:
    if Gt.size == 0:
        return 0.0
    return float(np.trace(pseudo_inverse(Gt, rtol) @ Gb))


def objective(A, S_t, S_b, rtol=None) -> float:
    """``tr{(A^T S_t A)^+ A^T S_b A}``."""
    A = np.asarray(A, dtype=float)
    S_t = np.asarray(S_t, dtype=float)
    S_b = np.asarray(S_b, dtype=float)
    for name, arr in (("A", A), ("S_t", S_t), ("S_b", S_b)):
        if not np.all(np.isfinite(arr)):
            raise ValidationError(f"{name} contains non-finite values")
    if A.ndim == 1:
        A = A[:, None]
    if S_t.shape != (A.shape[0], A.shape[0]) or S_b.shape != S_t.shape:
        raise ValidationError(
            f"shapes do not match: A {A.shape}, S_t {S_t.shape}, S_b {S_b.shape}"
        )
    Q = _range_basis(A, rtol)
    Gt = Q.T @ S_t @ Q
    Gb = Q.T @ S_b @ Q
    return _trace_objective((Gt + Gt.T) / 2, (Gb + Gb.T) / 2, rtol)


def objective_from_factors(A, H_t, H_b, lam: float = 0.0, rtol=None) -> float:
    """The objective evaluated through factors, without D x D matrices."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    Q = _range_basis(A, rtol)
    HA = np.asarray(H_t) @ Q
    Gt = HA.T @ HA + lam * np.eye(Q.shape[1])
    HbA = np.asarray(H_b) @ Q
    return _trace_objective((Gt + Gt.T) / 2, HbA.T @ HbA, rtol)


def optimal_objective(S_t, S_b, rtol=None) -> float:
    """``tr{S_t^+ S_b}``, the objective with no dimensionality reduction."""
    return float(np.trace(pseudo_inverse(S_t, rtol) @ S_b))


def two_svd_solve(H1, H2, lam: float = 0.0, rtol=None):
    """Solve ``H1^T H1 A = (H2^T H2 + lam I) A diag(values)`` with two reduced SVDs.

    Returns ``(A, values)``.  This is correct when the range of ``H1^T H1``
    lies inside the range of ``H2^T H2`` (true for between/total scatter);
    otherwise the result generally violates the eigensystem, which
    :func:`verify_generalized_eigensystem` exposes.
    """
    svd2 = reduced_svd(H2, rtol)
    root = np.sqrt(svd2.sigma**2 + lam)
    Y = (np.asarray(H1, dtype=float) @ svd2.V) / root
    svdY = reduced_svd(Y, rtol)
    values = svdY.sigma**2
    if values.size:
        keep = values > EIG_FLOOR * values[0]
        values = values[keep]
        Vt = svdY.V[:, keep]
    else:
        Vt = svdY.V
    A = svd2.V @ (Vt / root[:, None])
    return A, values


def _whitened_eig(S_b, S_t, rtol=None):
    """Generalized eigenpairs of ``(S_b, S_t)`` via whitening on ``range(S_t)``."""
    eig = sym_eig(S_t)
    lmax = eig.values[0] if eig.values.size else 0.0
    if rtol is None:
        rtol = default_rtol(S_t.shape)
    r = int(np.sum(eig.values > rtol * lmax)) if lmax > 0 else 0
    W = eig.vectors[:, :r] / np.sqrt(eig.values[:r])
    inner = sym_eig(W.T @ S_b @ W)
    values = inner.values
    keep = values > EIG_FLOOR * values[0] if values.size and values[0] > 0 else np.zeros(values.size, bool)
    return W @ inner.vectors[:, keep], values[keep]


def eig_lda(d: Dataset, lam: float = 0.0, mode: str = "ldlss", rtol=None) -> LdaModel:
    """Classical LDA: eigenvectors of ``S_b a = l (S_t + lam I) a``, at most C-1."""
    if d.n_clusters < 2:
        raise ValidationError("nothing to discriminate: need at least 2 clusters")
    p = _Problem(d, lam, mode, rtol)
    if mode == "ldlss":
        A, values = _whitened_eig(p.scatter.S_b, p.scatter.S_t, rtol)
    else:
        A, values = two_svd_solve(p.factors.H_b, p.factors.H_t, p.lam, rtol)
    k = min(d.n_clusters - 1, values.size)
    return p.model(A[:, :k], "eig-lda", eigenvalues=values[:k])


def ldapp(d: Dataset, lam: float = 0.0, mode: str = "ldlss", rtol=None) -> LdaModel:
    """Prototype solution ``A = (S_t + lam I)^+ M``: feature c scores cluster c."""
    p = _Problem(d, lam, mode, rtol)
    A = _ldapp_matrix(p)
    return p.model(A, "lda++", prototype_index=tuple(range(d.n_clusters)))


def _ldapp_matrix(p: _Problem) -> np.ndarray:
    if p.mode == "ldlss":
        return least_squares_minnorm(p.scatter.S_t, p.M, p.rtol)
    return p.total().apply_inverse(p.M)


def eig_ldapp(d: Dataset, lam: float = 0.0, mode: str = "ldlss", rtol=None) -> LdaModel:
    """LDA++ followed by the metric change ``Z`` solving ``Q M^T S_t^+ M Z = Z L``.

    ``Q M^T S_t^+ M`` is similar to the symmetric ``Q^1/2 M^T S_t^+ M Q^1/2``,
    so ``Z = Q^1/2 V`` for its orthonormal eigenvectors ``V``; columns of
    ``Z`` are scaled to unit length.
    """
    p = _Problem(d, lam, mode, rtol)
    A0 = _ldapp_matrix(p)
    t0 = time.perf_counter()
    Z, values = _metric_change(p.M.T @ A0, p.stats.counts / d.N)
    z_seconds = time.perf_counter() - t0
    return p.model(
        A0 @ Z, "eig-lda++", eigenvalues=values,
        diagnostics={"z_seconds": z_seconds, "Z": Z},
    )


def _metric_change(core: np.ndarray, weights: np.ndarray):
    core = (core + core.T) / 2
    root = np.sqrt(weights)
    eig = sym_eig(root[:, None] * core * root[None, :])
    Z = root[:, None] * eig.vectors
    Z = Z / np.linalg.norm(Z, axis=0)
    return Z, eig.values


def prototype_eig_lda(d: Dataset, lam: float = 0.0, mode: str = "ldlss", rtol=None) -> LdaModel:
    """EIG-LDA rebuilt from the C-1 prototype solution ``S_t^+ M_hat``.

    Solves ``Q_tilde M_hat^T S_t^+ M_hat Z_hat = Z_hat L`` (a
    (C-1) x (C-1) problem) and returns ``S_t^+ M_hat Z_hat``.  Up to column
    scaling this reproduces the classical eigenvectors.
    """
    if d.n_clusters < 2:
        raise ValidationError("nothing to discriminate: need at least 2 clusters")
    p = _Problem(d, lam, mode, rtol)
    keep = [c for c in range(d.n_clusters) if c != p.stats.dropped]
    A_hat = _ldapp_matrix(p)[:, keep]
    core = p.stats.M_hat.T @ A_hat
    core = (core + core.T) / 2
    Qt = p.stats.Q_tilde
    Qt_root = sym_sqrt(Qt)
    eig = sym_eig(Qt_root @ core @ Qt_root)
    # Q~ C Z = Z L  with  Z = Q~^1/2 V  since  Q~^1/2 C Q~^1/2 V = V L
    Z = Qt_root @ eig.vectors
    Z = Z / np.linalg.norm(Z, axis=0)
    return p.model(A_hat @ Z, "eig-lda", eigenvalues=eig.values, diagnostics={"Z_hat": Z})


def sw_solution(d: Dataset, lam: float = 0.0, mode: str = "ldlss", rtol=None) -> LdaModel:
    """Bayes-classifier directions ``A = (S_w + lam I)^+ M``.

    ``diagnostics['gate']`` reports whether ``S_w + lam I`` and
    ``M_hat^T (S_w + lam I)^-1 M_hat`` are well enough conditioned for the
    solution to be guaranteed optimal.
    """
    lam = _check_lambda(lam)
    _check_mode(mode)
    stats = compute_cluster_stats(d)
    if mode == "ldlss":
        sc = compute_scatter(d, stats)
        Sw = sc.S_w + lam * np.eye(d.D)
        A = least_squares_minnorm(Sw, stats.M, rtol)
        cond_sw = condition_number(Sw)
        R = stats.M_hat.T @ pseudo_inverse(Sw, rtol) @ stats.M_hat
    else:
        f = compute_factors(d, stats)
        W = factored(f.H_w, lam, rtol)
        A = W.apply_inverse(stats.M)
        vals = W.range_values
        if W.V.shape[1] < d.D:
            vals = np.append(vals, lam)
        cond_sw = float(vals.max() / vals.min()) if vals.size and vals.min() > 0 else np.inf
        R = stats.M_hat.T @ W.apply_inverse(stats.M_hat)
    cond_R = condition_number(R) if R.size else np.inf
    gate = {
        "cond_sw": cond_sw,
        "cond_R": cond_R,
        "passed": bool(cond_sw < GATE_COND and cond_R < GATE_COND),
    }
    # objective against the total scatter shifted by the same lam
    p = _Problem(d, lam, mode, rtol)
    return p.model(
        A, "sw-pinv-m", prototype_index=tuple(range(d.n_clusters)),
        diagnostics={"gate": gate},
    )


def sw_optimality_gate(model: LdaModel) -> dict:
    return model.diagnostics["gate"]


FITTERS = {
    "eig-lda": eig_lda,
    "lda++": ldapp,
    "eig-lda++": eig_ldapp,
    "sw-pinv-m": sw_solution,
}


def fit(d: Dataset, solver: str = "lda++", lam: float = 0.0, mode: str = "ldlss",
        rtol=None, drop: int | None = None) -> LdaModel:
    """Fit any solver by name, optionally dropping one feature afterwards."""
    if solver not in FITTERS:
        raise ValidationError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    m = FITTERS[solver](d, lam, mode, rtol)
    if drop is not None:
        m = drop_feature(m, drop)
    return m


def drop_feature(m: LdaModel, c: int) -> LdaModel:
    """Remove feature column ``c`` (only from C-feature models) and rescore."""
    if m.solver == "eig-lda" or m.F != m.n_clusters:
        raise ValidationError(
            f"drop_feature needs one feature per cluster ({m.n_clusters}), model has {m.F}"
        )
    if not 0 <= c < m.F:
        raise ValidationError(f"feature index {c} out of range 0..{m.F - 1}")
    keep = [j for j in range(m.F) if j != c]
    Gt = m.gram_t[np.ix_(keep, keep)]
    Gb = m.gram_b[np.ix_(keep, keep)]
    proto = None if m.prototype_index is None else tuple(m.prototype_index[j] for j in keep)
    eig = None if m.eigenvalues is None else m.eigenvalues[keep]
    diag = dict(m.diagnostics)
    diag["dropped"] = c
    return replace(
        m, A=m.A[:, keep], gram_t=Gt, gram_b=Gb, objective=_trace_objective(Gt, Gb),
        prototype_index=proto, eigenvalues=eig, diagnostics=diag,
    )


def transform(m: LdaModel, X) -> np.ndarray:
    """Features ``(X - mean) @ A`` of query rows ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != m.D:
        raise ValidationError(f"query has {X.shape[1]} columns, model expects {m.D}")
    return (X - m.mean) @ m.A


def pca_factored_transform(d: Dataset, m: LdaModel, X, rtol=None) -> np.ndarray:
    """LDA++ features computed as dot products of weighted PCA coordinates.

    With ``S_t = Phi Lambda Phi^T`` and ``Sigma^2 = Lambda^+`` the features
    are ``(Sigma Phi^T M)^T (Sigma Phi^T (x - mu))``.  Matches
    :func:`transform` for an unregularized ``lda++`` model.
    """
    if m.solver != "lda++" or m.lam != 0:
        raise ValidationError("pca_factored_transform needs an unregularized lda++ model")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != d.D:
        raise ValidationError(f"query has {X.shape[1]} columns, model expects {d.D}")
    stats = compute_cluster_stats(d)
    P = weighted_pca_basis(d, stats, mode=m.mode, rtol=rtol)
    prototypes = P.T @ stats.M
    queries = (X - stats.mu) @ P
    return queries @ prototypes[:, list(m.prototype_index)]


def weighted_pca_basis(d: Dataset, stats: ClusterStats | None = None,
                       mode: str = "ldlss", rtol=None) -> np.ndarray:
    """``Phi_r Sigma_r``: principal axes of ``S_t`` scaled by ``1/sqrt(eigenvalue)``."""
    if stats is None:
        stats = compute_cluster_stats(d)
    if mode == "ldlss":
        S_t = compute_scatter(d, stats).S_t
        eig = sym_eig(S_t)
        tol = (default_rtol(S_t.shape) if rtol is None else rtol) * max(eig.values[0], 0)
        r = int(np.sum(eig.values > tol)) if eig.values[0] > 0 else 0
        return eig.vectors[:, :r] / np.sqrt(eig.values[:r])
    svd = reduced_svd(compute_factors(d, stats).H_t, rtol)
    return svd.V / svd.sigma


def bayes_weights(s: ClusterStats, S_w, priors=None, lam: float = 0.0) -> BayesWeights:
    """Weights ``w_c = S^-1 mu_c`` and biases of the shared-covariance Bayes rule."""
    lam = _check_lambda(lam)
    Sw = np.asarray(S_w, dtype=float) + lam * np.eye(s.mu.size)
    if condition_number(Sw) >= GATE_COND:
        raise NumericalError(
            "within-cluster scatter is singular; pass lam > 0 to regularize"
        )
    if priors is None:
        priors = s.counts / s.N
    priors = np.asarray(priors, dtype=float)
    if priors.shape != (s.C,) or np.any(priors <= 0) or abs(priors.sum() - 1) > 1e-12:
        raise ValidationError("priors must be C positive numbers summing to 1")
    w = np.linalg.solve(Sw, s.mu_c.T)
    b = -0.5 * np.einsum("cd,dc->c", s.mu_c, w) + np.log(priors)
    return BayesWeights(w, b, priors)


def verify_generalized_eigensystem(S1, S2, A, eigenvalues) -> float:
    """``max |S1 A - S2 A diag(eigenvalues)|``."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    lam = np.asarray(eigenvalues, dtype=float)
    R = np.asarray(S1) @ A - (np.asarray(S2) @ A) * lam[None, :]
    return float(np.max(np.abs(R))) if R.size else 0.0


def feature_objective(Y, d: Dataset, rtol=None) -> float:
    """Objective of already-extracted features ``Y`` (N x F) of dataset ``d``.

    Equals ``objective(I, S_t^Y, S_b^Y)`` with the scatters of ``Y``.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != d.N:
        raise ValidationError(f"expected {d.N} feature rows, got {Y.shape[0]}")
    sc = compute_scatter(Dataset(Y, d.labels, d.n_clusters))
    return _trace_objective(sc.S_t, sc.S_b, rtol)
