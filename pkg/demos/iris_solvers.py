"""
Four LDA solvers on iris
========================

Every solver below lands on the same objective value, even though the
transforms look nothing alike.  The classical eigen solver returns C-1
features; the prototype solver returns one feature per class.
"""

import numpy as np

from ldapp import cross_validate, fit, load_iris, transform
from ldapp.evaluation import SolverConfig
from ldapp.numerics import principal_angles
from ldapp.solvers import drop_feature

iris = load_iris()
print(f"iris: N={iris.N}, D={iris.D}, classes={iris.class_names}")

# fit each solver on the full data
models = {name: fit(iris, name) for name in ("eig-lda", "lda++", "eig-lda++", "sw-pinv-m")}
for name, m in models.items():
    print(f"{name:10s} F={m.F}  J={m.objective:.12f}")

# lda++ features are scores against the class prototypes: the first three
# samples are setosa, so their first feature should dominate
print(np.round(transform(models["lda++"], iris.X[:3]), 3))

# dropping any one column of lda++ leaves a C-1 dimensional optimum that
# spans the same subspace as eig-lda
for c in range(3):
    reduced = drop_feature(models["lda++"], c)
    cos = principal_angles(models["eig-lda"].A, reduced.A)
    print(f"drop {c}: J={reduced.objective:.12f}, cosines={np.round(cos, 12)}")

# 10-fold nearest-neighbour accuracy in the projected space
for name in models:
    rep = cross_validate(iris, SolverConfig(name))
    print(f"{name:10s} accuracy {rep.mean_accuracy:.2f} +- {rep.std_accuracy:.2f}, "
          f"mean fold J {rep.mean_objective:.4f}")
