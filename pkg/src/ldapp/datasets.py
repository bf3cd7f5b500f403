"""
Data ingestion: CSV loading, the bundled iris data and the synthetic
three-Gaussian generator used for timing benchmarks.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .scatter import Dataset, _encode_first_appearance


@dataclass(frozen=True)
class RawTable:
    X: np.ndarray
    class_ids: np.ndarray | None
    class_names: tuple | None
    header: tuple | None


def load_csv(path, label_column: int | str | None = -1, has_header: bool = True,
             append_label: bool = False) -> RawTable:
    """Read a comma-separated numeric table with an optional label column.

    Class ids are assigned in order of first appearance.  With
    ``append_label`` the numeric class id is appended as an extra feature
    (the "singular" variant of a dataset, whose within-class scatter is
    rank deficient).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    header = None
    if has_header:
        if not rows:
            raise ValidationError(f"{path}: empty file")
        header = tuple(c.strip() for c in rows[0])
        rows = rows[1:]
    if not rows:
        raise ValidationError(f"{path}: no data rows")
    width = len(rows[0])
    first = 2 if has_header else 1
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ValidationError(
                f"{path}: row {i + first} has {len(r)} cells, expected {width}"
            )
    lab = _resolve_label_column(label_column, header, width, path)
    feats = [j for j in range(width) if j != lab]
    X = np.empty((len(rows), len(feats)))
    for i, r in enumerate(rows):
        for k, j in enumerate(feats):
            try:
                X[i, k] = float(r[j])
            except ValueError:
                raise ValidationError(
                    f"{path}: row {i + first}, column {j + 1}: non-numeric value {r[j]!r}"
                ) from None
    if not np.all(np.isfinite(X)):
        bad = np.argwhere(~np.isfinite(X))[0]
        raise ValidationError(
            f"{path}: row {bad[0] + first}, column {feats[bad[1]] + 1}: non-finite value"
        )
    ids = names = None
    if lab is not None:
        ids, names = _encode_first_appearance([r[lab].strip() for r in rows])
        names = tuple(names)
        if append_label:
            X = np.column_stack([X, ids.astype(float)])
    elif append_label:
        raise ValidationError("append_label needs a label column")
    return RawTable(X, ids, names, header)


def _resolve_label_column(label_column, header, width, path):
    if label_column is None:
        return None
    if isinstance(label_column, str):
        if label_column.lstrip("-").isdigit():
            label_column = int(label_column)
        else:
            if header is None or label_column not in header:
                raise ValidationError(f"{path}: missing label column {label_column!r}")
            return header.index(label_column)
    j = label_column + width if label_column < 0 else label_column
    if not 0 <= j < width:
        raise ValidationError(f"{path}: missing label column {label_column} (only {width} columns)")
    return j


def dataset_from_table(t: RawTable) -> Dataset:
    if t.class_ids is None:
        raise ValidationError("table has no label column")
    return Dataset(t.X, t.class_ids, len(t.class_names), class_names=t.class_names)


def iris_path() -> Path:
    return Path(str(resources.files("ldapp") / "data" / "iris.csv"))


def load_iris(singular: bool = False) -> Dataset:
    """The 150-sample iris data; ``singular=True`` appends the class id as a 5th feature."""
    return dataset_from_table(load_csv(iris_path(), append_label=singular))


SYNTH_COV = np.array([[4.625, 4.375], [4.375, 4.625]])
SYNTH_MEANS = np.array([[-5.0, -5.0], [0.0, 0.0], [5.0, 5.0]])
SYNTH_NOISE_STD = 0.5


@dataclass(frozen=True)
class SynthConfig:
    """Three Gaussian classes; dimension is ``2 + extra_dims``.

    ``mean_scale`` multiplies the class means (1 reproduces the benchmark
    generator; larger values separate the classes).
    """

    samples_per_class: int = 300
    extra_dims: int = 0
    seed: int = 0
    mean_scale: float = 1.0

    @property
    def dim(self) -> int:
        return 2 + self.extra_dims


def synth_generate(cfg: SynthConfig) -> Dataset:
    if cfg.samples_per_class < 1 or cfg.extra_dims < 0:
        raise ValidationError("samples_per_class must be >= 1 and extra_dims >= 0")
    rng = np.random.default_rng(cfg.seed)
    n = cfg.samples_per_class
    L = np.linalg.cholesky(SYNTH_COV)
    base = rng.standard_normal((3 * n, 2)) @ L.T
    base += np.repeat(SYNTH_MEANS * cfg.mean_scale, n, axis=0)
    extra = rng.normal(0.0, SYNTH_NOISE_STD, size=(3 * n, cfg.extra_dims))
    labels = np.repeat(np.arange(3), n)
    return Dataset(np.hstack([base, extra]), labels, 3)
