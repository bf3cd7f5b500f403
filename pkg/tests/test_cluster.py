import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldapp.cluster import kmeans, subclass_partition
from ldapp.errors import ValidationError
from ldapp.scatter import compute_scatter
from ldapp.solvers import eig_lda, ldapp


def best_two_partition(X):
    """Exhaustive minimum-inertia split into two non-empty groups."""
    N = X.shape[0]
    best, best_labels = np.inf, None
    for bits in itertools.product([0, 1], repeat=N - 1):
        labels = np.array((0,) + bits)
        if labels.all() or not labels.any():
            continue
        cost = sum(np.sum((X[labels == j] - X[labels == j].mean(axis=0)) ** 2) for j in (0, 1))
        if cost < best:
            best, best_labels = cost, labels
    return best, best_labels


def same_partition(a, b):
    return all(len(set(b[a == v])) == 1 for v in np.unique(a)) and len(np.unique(a)) == len(np.unique(b))


class TestKmeans:
    def test_k_equals_n(self):
        X = np.random.default_rng(0).normal(size=(7, 2))
        p = kmeans(X, 7)
        assert p.inertia == 0.0
        assert sorted(map(tuple, p.centers)) == sorted(map(tuple, X))

    def test_two_blobs_match_exhaustive_oracle(self):
        rng = np.random.default_rng(1)
        X = np.vstack([rng.normal(size=(6, 2)) * 0.3, rng.normal(size=(6, 2)) * 0.3 + [5, 5]])
        cost, labels = best_two_partition(X)
        p = kmeans(X, 2, seed=3)
        assert same_partition(p.labels, labels)
        assert p.inertia == pytest.approx(cost, rel=1e-12)

    def test_deterministic(self):
        X = np.random.default_rng(2).normal(size=(50, 3))
        a, b = kmeans(X, 4, seed=11), kmeans(X, 4, seed=11)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.centers, b.centers)
        assert a.inertia_history == b.inertia_history

    def test_duplicate_points_all_clusters_non_empty(self):
        X = np.vstack([np.zeros((5, 2)), np.ones((1, 2))])
        p = kmeans(X, 3, seed=0)
        assert set(p.labels) == {0, 1, 2}

    @pytest.mark.parametrize("k", [0, 5])
    def test_bad_k(self, k):
        with pytest.raises(ValidationError):
            kmeans(np.zeros((4, 1)), k)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 6))
def test_inertia_non_increasing(seed, k):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(int(rng.integers(k, 60)), int(rng.integers(1, 5))))
    h = np.array(kmeans(X, k, seed=seed).inertia_history)
    assert np.all(np.diff(h) <= 1e-9 * (1 + h[0]))


class TestSubclassPartition:
    def test_one_per_class_is_identity(self, iris):
        d = subclass_partition(iris.X, iris.labels, 1)
        np.testing.assert_array_equal(d.labels, iris.labels)
        np.testing.assert_array_equal(d.class_of_cluster, [0, 1, 2])

    def test_sixty_clusters(self):
        rng = np.random.default_rng(3)
        labels = np.repeat(np.arange(10), 30)
        d = subclass_partition(rng.normal(size=(300, 5)), labels, 6)
        assert d.n_clusters == 60
        np.testing.assert_array_equal(d.classes, labels)
        np.testing.assert_array_equal(d.class_of_cluster, np.repeat(np.arange(10), 6))

    def test_forty_by_four_feature_counts(self):
        rng = np.random.default_rng(4)
        labels = np.repeat(np.arange(40), 10)
        X = rng.normal(size=(40, 300))[labels] + rng.normal(size=(400, 300))
        d = subclass_partition(X, labels, 4, seed=0)
        assert d.n_clusters == 160
        assert eig_lda(d, mode="hdsss").F == 159
        assert ldapp(d, mode="hdsss").F == 160

    def test_per_class_k(self):
        labels = np.repeat(np.arange(2), 10)
        d = subclass_partition(np.random.default_rng(5).normal(size=(20, 2)), labels, [2, 3])
        assert d.n_clusters == 5
        np.testing.assert_array_equal(d.class_of_cluster, [0, 0, 1, 1, 1])

    def test_too_few_samples(self):
        with pytest.raises(ValidationError, match="class 1 has 2 samples"):
            subclass_partition(np.zeros((5, 1)), [0, 0, 0, 1, 1], 3)

    def test_relabeling_preserves_scatter(self):
        rng = np.random.default_rng(6)
        labels = np.repeat(np.arange(3), 40)
        X = rng.normal(size=(120, 4)) + 3 * labels[:, None]
        perm = np.array([2, 0, 1])
        a = subclass_partition(X, labels, 3, seed=9)
        b = subclass_partition(X, perm[labels], 3, seed=9)
        assert same_partition(a.labels, b.labels)
        sa, sb = compute_scatter(a), compute_scatter(b)
        np.testing.assert_allclose(sa.S_w, sb.S_w, atol=1e-12)
        np.testing.assert_allclose(sa.S_b, sb.S_b, atol=1e-12)
