import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ldapp.errors import NumericalError, ValidationError
from ldapp.numerics import principal_angles
from ldapp.scatter import Dataset, compute_cluster_stats, compute_factors, compute_scatter
from ldapp.solvers import (bayes_weights, drop_feature, eig_lda, eig_ldapp, fit, ldapp,
                           objective, objective_from_factors, optimal_objective,
                           pca_factored_transform, prototype_eig_lda, sw_solution,
                           transform, two_svd_solve, verify_generalized_eigensystem)

from conftest import random_dataset, rank_deficient_dataset

IRIS_OPTIMUM = 1.1918988250414633          # tr{S_t^+ S_b} on iris (scipy oracle)
SINGULAR_IRIS_OPTIMUM = 1.6632674721015301


def scipy_optimum(d):
    sc = compute_scatter(d)
    return float(np.trace(scipy.linalg.pinv(sc.S_t) @ sc.S_b))


def test_frozen_iris_optima(iris, singular_iris):
    assert scipy_optimum(iris) == pytest.approx(IRIS_OPTIMUM, rel=1e-12)
    assert scipy_optimum(singular_iris) == pytest.approx(SINGULAR_IRIS_OPTIMUM, rel=1e-12)


class TestEigLda:
    def test_two_point_clusters(self):
        d = Dataset(np.array([[-1.0], [-1.0], [1.0], [1.0]]), [0, 0, 1, 1], 2)
        for mode in ("ldlss", "hdsss"):
            m = eig_lda(d, mode=mode)
            assert m.F == 1
            assert m.eigenvalues[0] == pytest.approx(1.0, abs=1e-12)
            assert m.objective == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("mode", ["ldlss", "hdsss"])
    def test_iris_reaches_trace_oracle(self, iris, mode):
        m = eig_lda(iris, mode=mode)
        assert m.F == 2
        assert m.objective == pytest.approx(IRIS_OPTIMUM, abs=1e-9)

    def test_eigenvalues_match_scipy_generalized(self, iris):
        sc = compute_scatter(iris)
        ref = scipy.linalg.eigh(sc.S_b, sc.S_t, eigvals_only=True)[::-1][:2]
        np.testing.assert_allclose(eig_lda(iris).eigenvalues, ref, atol=1e-10)
        np.testing.assert_allclose(eig_lda(iris, mode="hdsss").eigenvalues, ref, atol=1e-10)

    def test_single_cluster_rejected(self):
        with pytest.raises(ValidationError):
            eig_lda(Dataset(np.ones((3, 2)), [0, 0, 0], 1))


class TestLdapp:
    def test_single_cluster_gives_zero(self):
        X = np.random.default_rng(0).normal(size=(6, 3))
        m = ldapp(Dataset(X, np.zeros(6, int), 1))
        np.testing.assert_allclose(m.A, 0.0, atol=1e-14)
        assert m.objective == 0.0

    def test_paths_agree_entrywise(self):
        d = random_dataset(np.random.default_rng(1), N=80, D=6, C=4)
        np.testing.assert_allclose(ldapp(d).A, ldapp(d, mode="hdsss").A, atol=1e-8)

    def test_regularized_paths_agree(self):
        d = random_dataset(np.random.default_rng(2), N=25, D=40, C=3)
        a, b = ldapp(d, lam=0.3), ldapp(d, lam=0.3, mode="hdsss")
        np.testing.assert_allclose(a.A, b.A, atol=1e-8)
        assert a.objective == pytest.approx(b.objective, rel=1e-10)

    def test_iris_matches_eig_lda(self, iris):
        assert ldapp(iris).objective == pytest.approx(eig_lda(iris).objective, abs=1e-10)

    def test_definition(self, iris):
        sc = compute_scatter(iris)
        M = compute_cluster_stats(iris).M
        np.testing.assert_allclose(ldapp(iris).A, np.linalg.solve(sc.S_t, M), atol=1e-10)


class TestDropFeature:
    @pytest.mark.parametrize("c", [0, 1, 2])
    def test_iris_each_column(self, iris, c):
        m = drop_feature(ldapp(iris), c)
        assert m.F == 2
        assert m.objective == pytest.approx(IRIS_OPTIMUM, abs=1e-10)
        sc = compute_scatter(iris)
        assert objective(m.A, sc.S_t, sc.S_b) == pytest.approx(IRIS_OPTIMUM, abs=1e-10)

    def test_two_clusters_line_matches_eig_lda(self):
        d = random_dataset(np.random.default_rng(3), N=40, D=5, C=2)
        a = drop_feature(ldapp(d), 0)
        cos = principal_angles(a.A, eig_lda(d).A)
        assert cos[0] > 1 - 1e-10

    def test_reduced_model_rejected(self, iris):
        with pytest.raises(ValidationError):
            drop_feature(eig_lda(iris), 0)
        with pytest.raises(ValidationError):
            drop_feature(drop_feature(ldapp(iris), 0), 0)

    def test_index_range(self, iris):
        with pytest.raises(ValidationError):
            drop_feature(ldapp(iris), 3)


class TestEigLdapp:
    def test_objective_preserved(self, iris):
        assert eig_ldapp(iris).objective == pytest.approx(ldapp(iris).objective, abs=1e-10)

    def test_equal_sizes_make_z_orthogonal(self, iris):
        Z = eig_ldapp(iris).diagnostics["Z"]
        np.testing.assert_allclose(Z.T @ Z, np.eye(3), atol=1e-8)

    def test_z_solves_its_eigensystem(self):
        d = random_dataset(np.random.default_rng(4), N=60, D=5, C=4)
        m = eig_ldapp(d)
        s = compute_cluster_stats(d)
        core = s.Q @ s.M.T @ ldapp(d).A
        Z = m.diagnostics["Z"]
        np.testing.assert_allclose(core @ Z, Z * m.eigenvalues, atol=1e-10)

    def test_leading_columns_are_eig_lda_span(self, iris):
        cos = principal_angles(eig_ldapp(iris).A[:, :2], eig_lda(iris).A)
        assert cos.min() > 1 - 1e-10

    def test_z_step_fast_for_160_clusters(self):
        rng = np.random.default_rng(5)
        labels = np.repeat(np.arange(160), 2)
        X = rng.normal(size=(160, 600))[labels] + 0.1 * rng.normal(size=(320, 600))
        m = eig_ldapp(Dataset(X, labels, 160), mode="hdsss")
        assert m.F == 160
        assert m.diagnostics["z_seconds"] < 0.010


class TestPrototypeEigLda:
    def test_reconstructs_eig_lda_basis(self):
        for seed in range(5):
            d = random_dataset(np.random.default_rng(10 + seed), N=90, D=8, C=4)
            cos = principal_angles(prototype_eig_lda(d).A, eig_lda(d).A)
            assert np.arccos(np.clip(cos, -1, 1)).max() < 1e-6

    def test_iris_eigenvalues(self, iris):
        np.testing.assert_allclose(prototype_eig_lda(iris).eigenvalues,
                                   eig_lda(iris).eigenvalues, atol=1e-10)


class TestSwSolution:
    def test_iris_optimal_and_gate_passes(self, iris):
        m = sw_solution(iris)
        assert m.diagnostics["gate"]["passed"]
        assert m.objective == pytest.approx(IRIS_OPTIMUM, abs=1e-9)

    def test_singular_iris_fails_gate(self, singular_iris):
        m = sw_solution(singular_iris)
        assert not m.diagnostics["gate"]["passed"]
        assert m.objective == pytest.approx(1.19, abs=0.05)
        assert SINGULAR_IRIS_OPTIMUM - m.objective > 0.3

    def test_hdsss_path(self, iris, singular_iris):
        assert sw_solution(iris, mode="hdsss").objective == pytest.approx(IRIS_OPTIMUM, abs=1e-9)
        m = sw_solution(singular_iris, mode="hdsss")
        assert not m.diagnostics["gate"]["passed"]

    def test_columns_equal_bayes_weights_for_centered_data(self):
        rng = np.random.default_rng(6)
        labels = np.repeat(np.arange(3), 200)
        X = rng.normal(size=(3, 2))[labels] * 3 + rng.normal(size=(600, 2)) @ [[1, 0.3], [0, 1]]
        X -= X.mean(axis=0)
        d = Dataset(X, labels, 3)
        s = compute_cluster_stats(d)
        w = bayes_weights(s, compute_scatter(d, s).S_w).w
        np.testing.assert_allclose(sw_solution(d).A, w, atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_sw_gate_implies_optimality(seed):
    d = random_dataset(np.random.default_rng(seed))
    m = sw_solution(d)
    if m.diagnostics["gate"]["passed"]:
        opt = scipy_optimum(d)
        assert abs(m.objective - opt) < 1e-8 * (1 + opt)


def test_sw_ill_conditioned_within_scatter():
    # cond(S_w) ~ 5e6 passes the gate but leaves A with column scales from 3e6 to 1e-10
    d = random_dataset(np.random.default_rng(19848005))
    m = sw_solution(d)
    assert m.diagnostics["gate"]["passed"]
    assert m.objective == pytest.approx(scipy_optimum(d), rel=1e-8)


class TestObjective:
    def test_column_scaling_invariance(self, iris):
        sc = compute_scatter(iris)
        A = np.random.default_rng(3).normal(size=(4, 2))
        ref = objective(A, sc.S_t, sc.S_b)
        assert objective(A * [1e7, 1e-3], sc.S_t, sc.S_b) == pytest.approx(ref, rel=1e-10)

    def test_zero_transform(self, iris):
        sc = compute_scatter(iris)
        assert objective(np.zeros((4, 2)), sc.S_t, sc.S_b) == 0.0

    def test_identity_is_optimum(self, iris):
        sc = compute_scatter(iris)
        assert objective(np.eye(4), sc.S_t, sc.S_b) == pytest.approx(IRIS_OPTIMUM, rel=1e-12)
        assert optimal_objective(sc.S_t, sc.S_b) == pytest.approx(IRIS_OPTIMUM, rel=1e-12)

    def test_shape_check(self, iris):
        sc = compute_scatter(iris)
        with pytest.raises(ValidationError):
            objective(np.eye(3), sc.S_t, sc.S_b)

    def test_factor_form(self):
        d = random_dataset(np.random.default_rng(7))
        A = np.random.default_rng(8).normal(size=(d.D, 2))
        sc, f = compute_scatter(d), compute_factors(d)
        assert objective_from_factors(A, f.H_t, f.H_b) == pytest.approx(
            objective(A, sc.S_t, sc.S_b), rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_optimality_band(seed):
    d = random_dataset(np.random.default_rng(seed))
    opt = scipy_optimum(d)
    for solver in ("eig-lda", "lda++", "eig-lda++"):
        J = fit(d, solver).objective
        assert abs(J - opt) < 1e-8 * (1 + opt), solver


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_any_single_drop_stays_optimal(seed):
    d = random_dataset(np.random.default_rng(seed))
    opt = scipy_optimum(d)
    m = ldapp(d)
    sc = compute_scatter(d)
    for c in range(d.n_clusters):
        reduced = drop_feature(m, c)
        assert abs(reduced.objective - opt) < 1e-8 * (1 + opt)
        assert abs(objective(reduced.A, sc.S_t, sc.S_b) - opt) < 1e-8 * (1 + opt)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_right_multiplication_invariance(seed):
    rng = np.random.default_rng(seed)
    d = random_dataset(rng)
    sc = compute_scatter(d)
    A = eig_lda(d).A
    Z = rng.normal(size=(A.shape[1], A.shape[1])) + 2 * np.eye(A.shape[1])
    J = objective(A, sc.S_t, sc.S_b)
    assert objective(A @ Z, sc.S_t, sc.S_b) == pytest.approx(J, rel=1e-8)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_regularized_solvers_reach_shifted_optimum(seed):
    rng = np.random.default_rng(seed)
    d = random_dataset(rng)
    lam = float(rng.uniform(1e-3, 2.0))
    sc = compute_scatter(d)
    opt = float(np.trace(np.linalg.solve(sc.S_t + lam * np.eye(d.D), sc.S_b)))
    for solver in ("eig-lda", "lda++", "eig-lda++"):
        for mode in ("ldlss", "hdsss"):
            J = fit(d, solver, lam, mode).objective
            assert abs(J - opt) < 1e-8 * (1 + opt), (solver, mode)


def test_hdsss_subspace_agreement():
    rng = np.random.default_rng(9)
    d = random_dataset(rng, N=60, D=300, C=4)
    a = eig_lda(d, mode="hdsss")
    b = drop_feature(ldapp(d, mode="hdsss"), 3)
    assert principal_angles(a.A, b.A).min() > 1 - 1e-8
    assert a.objective == pytest.approx(b.objective, rel=1e-8)


class TestBayesWeights:
    def test_identity_covariance(self):
        rng = np.random.default_rng(10)
        d = random_dataset(rng, N=30, D=3, C=3)
        s = compute_cluster_stats(d)
        np.testing.assert_allclose(bayes_weights(s, np.eye(3)).w, s.mu_c.T, atol=1e-14)

    def test_symmetric_pair_boundary(self):
        mu = np.array([1.0, 2.0])
        X = np.array([mu + [0.5, 0], mu - [0.5, 0], -mu + [0.5, 0], -mu - [0.5, 0]])
        s = compute_cluster_stats(Dataset(X, [0, 0, 1, 1], 2))
        bw = bayes_weights(s, np.eye(2))
        x = np.random.default_rng(11).normal(size=(50, 2))
        diff = bw.scores(x) @ [1.0, -1.0]
        np.testing.assert_allclose(diff, 2 * x @ mu, atol=1e-12)

    def test_matches_mahalanobis_classifier(self):
        rng = np.random.default_rng(12)
        labels = np.repeat(np.arange(3), 100)
        L = np.array([[1.0, 0.0], [0.8, 0.6]])
        X = np.array([[0, 0], [2, 1], [-1, 2.0]])[labels] + rng.normal(size=(300, 2)) @ L.T
        d = Dataset(X, labels, 3)
        s = compute_cluster_stats(d)
        Sw = compute_scatter(d, s).S_w
        bw = bayes_weights(s, Sw)
        T = rng.normal(size=(500, 2)) * 2
        P = np.linalg.inv(Sw)
        diff = T[:, None, :] - s.mu_c[None, :, :]
        maha = np.einsum("ncd,de,nce->nc", diff, P, diff)
        np.testing.assert_array_equal(bw.predict(T), np.argmin(maha, axis=1))

    def test_singular_within_scatter(self, singular_iris):
        s = compute_cluster_stats(singular_iris)
        Sw = compute_scatter(singular_iris, s).S_w
        with pytest.raises(NumericalError):
            bayes_weights(s, Sw)
        bayes_weights(s, Sw, lam=1e-3)


class TestTransform:
    def test_mean_maps_to_zero(self, iris):
        m = ldapp(iris)
        np.testing.assert_allclose(transform(m, m.mean), 0.0, atol=1e-14)

    def test_zero_transform(self, iris):
        m = ldapp(iris)
        z = type(m)(**{**m.__dict__, "A": np.zeros_like(m.A)})
        assert not transform(z, iris.X).any()

    def test_width_check(self, iris):
        with pytest.raises(ValidationError):
            transform(ldapp(iris), np.ones((2, 3)))


class TestPcaFactored:
    def test_mean_maps_to_zero(self, iris):
        m = ldapp(iris)
        np.testing.assert_allclose(pca_factored_transform(iris, m, m.mean), 0.0, atol=1e-12)

    def test_needs_unregularized_ldapp(self, iris):
        with pytest.raises(ValidationError):
            pca_factored_transform(iris, eig_lda(iris), iris.X)
        with pytest.raises(ValidationError):
            pca_factored_transform(iris, ldapp(iris, lam=1.0), iris.X)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), deficient=st.booleans())
def test_pca_factored_identity(seed, deficient):
    rng = np.random.default_rng(seed)
    if deficient:
        d = rank_deficient_dataset(rng, N=int(rng.integers(10, 30)), D=int(rng.integers(12, 40)),
                                   rank=int(rng.integers(2, 8)), C=3)
        mode = "hdsss"
    else:
        d = random_dataset(rng, D=8)
        mode = "ldlss"
    m = ldapp(d, mode=mode)
    Xq = d.X[:10] + 0.1 * rng.normal(size=(10, d.D))
    # A lies in range(S_t), so off-span query components drop out of both sides
    ref = transform(m, Xq)
    got = pca_factored_transform(d, m, Xq)
    np.testing.assert_allclose(got, ref, atol=1e-8 * (1 + np.abs(ref).max()))


def within_constant_feature_data(rng):
    """A feature constant inside each cluster: range(S_b) leaves range(S_w)."""
    C = int(rng.integers(2, 5))
    N = int(rng.integers(3 * C, 40))
    D = int(rng.integers(N + 1, N + 40))
    labels = np.arange(N) % C
    X = rng.normal(size=(N, D))
    X[:, 0] = rng.normal(size=C)[labels] * 3
    return Dataset(X, labels, C)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_two_svd_solves_total_pair(seed):
    rng = np.random.default_rng(seed)
    d = random_dataset(rng, N=int(rng.integers(10, 40)), D=int(rng.integers(40, 120)),
                       C=int(rng.integers(2, 6)))
    f, sc = compute_factors(d), compute_scatter(d)
    A, vals = two_svd_solve(f.H_b, f.H_t)
    assert verify_generalized_eigensystem(sc.S_b, sc.S_t, A, vals) < 1e-7


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_two_svd_fails_within_pair_counterexample(seed):
    rng = np.random.default_rng(seed)
    d = within_constant_feature_data(rng)
    f, sc = compute_factors(d), compute_scatter(d)
    A, vals = two_svd_solve(f.H_b, f.H_t)
    assert verify_generalized_eigensystem(sc.S_b, sc.S_t, A, vals) < 1e-7
    A, vals = two_svd_solve(f.H_b, f.H_w)
    assert verify_generalized_eigensystem(sc.S_b, sc.S_w, A, vals) > 1e-3


def test_dense_generalized_pair_4x4():
    rng = np.random.default_rng(13)
    B = rng.normal(size=(4, 4))
    S1 = B @ B.T
    G = rng.normal(size=(4, 4))
    S2 = G @ G.T + np.eye(4)
    vals, vecs = scipy.linalg.eig(S1, S2)
    assert verify_generalized_eigensystem(S1, S2, vecs.real, vals.real) < 1e-9


def test_fit_dispatch(iris):
    assert fit(iris, "eig-lda++").solver == "eig-lda++"
    assert fit(iris, "lda++", drop=1).F == 2
    with pytest.raises(ValidationError):
        fit(iris, "nope")
    with pytest.raises(ValidationError):
        fit(iris, "lda++", mode="wide")
