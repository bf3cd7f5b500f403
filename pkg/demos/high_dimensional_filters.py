"""
High-dimensional data and filter images
=======================================

A toy small-sample problem shaped like a face database: 40 "identities",
each a random 32x24 image, observed 6 times with noise.  Splitting each
identity into two k-means subclasses doubles the number of clusters, and
with it the number of prototype features.  The columns of the transform are
written out as PGM images plus a montage.
"""

import tempfile
from pathlib import Path

import numpy as np

from ldapp import Dataset, eig_lda, export_filters_pgm, ldapp, subclass_partition
from ldapp.numerics import principal_angles
from ldapp.solvers import drop_feature

H, W = 32, 24
rng = np.random.default_rng(0)
labels = np.repeat(np.arange(40), 6)
faces = rng.normal(size=(40, H * W))
X = faces[labels] + 0.7 * rng.normal(size=(labels.size, H * W))

d = Dataset(X, labels, 40)
print(f"N={d.N}, D={d.D}: far more dimensions than samples")

# in this regime the solvers work on the N x D factors, never on D x D scatters
pp = ldapp(d, mode="hdsss")
eig = eig_lda(d, mode="hdsss")
cos = principal_angles(eig.A, drop_feature(pp, 0).A)
print(f"lda++ F={pp.F}, eig-lda F={eig.F}, smallest cosine {cos.min():.12f}")
# with D > N each class collapses to a point, so J reaches its ceiling C-1 = 39
print(f"objectives {pp.objective:.10f} {eig.objective:.10f}")

sub = subclass_partition(X, labels, 2, seed=0)
print(f"after the split: {sub.n_clusters} clusters, lda++ F={ldapp(sub, mode='hdsss').F}")

out = Path(tempfile.mkdtemp(prefix="ldapp_filters_"))
paths = export_filters_pgm(pp, H, W, out / "filter")
print(f"wrote {len(paths) - 1} filters and {paths[-1].name} under {out}")
