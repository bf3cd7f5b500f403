"""
When the within-class scatter is singular
=========================================

Appending the class id as a fifth feature makes that feature constant inside
every class, so the within-class scatter loses rank.  The Bayes-style
solution built from S_w then stops being optimal, while solvers built from
the total scatter still find the best transform.
"""

from ldapp import cross_validate, fit, load_iris
from ldapp.evaluation import SolverConfig

d = load_iris(singular=True)
print(f"singular iris: D={d.D}")

sw = fit(d, "sw-pinv-m")
pp = fit(d, "lda++")
print("gate:", sw.diagnostics["gate"])
print(f"sw-pinv-m J={sw.objective:.6f}")
print(f"lda++     J={pp.objective:.6f}")

# the gap persists under cross-validation; lda++ also classifies perfectly
for name in ("sw-pinv-m", "lda++", "eig-lda"):
    rep = cross_validate(d, SolverConfig(name))
    print(f"{name:10s} mean fold J {rep.mean_objective:.4f}, accuracy {rep.mean_accuracy:.2f}")

# a small ridge restores an invertible S_w
ridge = fit(d, "sw-pinv-m", lam=1e-3)
print("gate with lambda=1e-3:", ridge.diagnostics["gate"]["passed"])
