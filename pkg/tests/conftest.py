import numpy as np
import pytest

from ldapp.datasets import load_iris
from ldapp.scatter import Dataset


@pytest.fixture(scope="session")
def iris():
    return load_iris()


@pytest.fixture(scope="session")
def singular_iris():
    return load_iris(singular=True)


def random_dataset(rng, N=None, D=None, C=None, spread=1.0):
    """Gaussian clusters with every cluster non-empty (LDLSS when N > D)."""
    N = int(rng.integers(30, 201)) if N is None else N
    D = int(rng.integers(3, 21)) if D is None else D
    C = int(rng.integers(2, 7)) if C is None else C
    labels = np.concatenate([np.arange(C), rng.integers(0, C, N - C)])
    rng.shuffle(labels)
    centers = rng.normal(scale=spread, size=(C, D))
    X = centers[labels] + rng.normal(size=(N, D)) @ rng.normal(size=(D, D)) / np.sqrt(D)
    return Dataset(X, labels, C)


def rank_deficient_dataset(rng, N=40, D=12, rank=5, C=3):
    """Samples confined to a ``rank``-dimensional affine subspace of R^D."""
    labels = np.concatenate([np.arange(C), rng.integers(0, C, N - C)])
    B = rng.normal(size=(rank, D))
    Z = rng.normal(size=(N, rank)) + rng.normal(size=(C, rank))[labels]
    return Dataset(Z @ B + rng.normal(size=D), labels, C)


# acceptance criteria append (number, verdict, seconds, detail) here
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, verdict, seconds, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number}: {verdict} ({seconds:.2f} s) {detail}")
