"""
Model files and filter images.

A model file is a JSON object written with one top-level field per line,
in a fixed order, with every float printed in shortest round-trip form.
Saving, loading and saving again therefore reproduces the file byte for
byte, and a loaded model transforms exactly like the original.

Filters are written as binary PGM (P5, maxval 255) images.
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .kernel import KernelDescriptor, KernelModel
from .solvers import LdaModel

FORMAT_VERSION = 1

LINEAR_FIELDS = (
    "format_version", "kind", "solver", "mode", "lambda", "D", "F", "n_clusters",
    "objective", "prototype_index", "class_of_cluster", "eigenvalues",
    "mean", "gram_t", "gram_b", "A",
)
KERNEL_FIELDS = (
    "format_version", "kind", "solver", "D", "N", "F", "n_clusters", "normalized",
    "kernel", "eigenvalues", "k_mean", "k_col_means", "alphas", "X_train",
)
_DESCRIPTOR_FIELDS = ("kind", "sigma", "degree", "coef", "center")


def _flat(a) -> list:
    return [float(v) for v in np.asarray(a, dtype=float).ravel()]


def _opt_list(a, cast=float):
    return None if a is None else [cast(v) for v in np.asarray(a).ravel()]


def model_to_dict(m: LdaModel | KernelModel) -> dict:
    if isinstance(m, KernelModel):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "kernel",
            "solver": m.solver,
            "D": int(m.X_train.shape[1]),
            "N": int(m.X_train.shape[0]),
            "F": int(m.F),
            "n_clusters": int(m.n_clusters),
            "normalized": bool(m.normalized),
            "kernel": m.descriptor.to_dict(),
            "eigenvalues": _flat(m.eigenvalues),
            "k_mean": float(m.k_mean),
            "k_col_means": _flat(m.k_col_means),
            "alphas": _flat(m.alphas),
            "X_train": _flat(m.X_train),
        }
    if isinstance(m, LdaModel):
        return {
            "format_version": FORMAT_VERSION,
            "kind": "linear",
            "solver": m.solver,
            "mode": m.mode,
            "lambda": float(m.lam),
            "D": int(m.D),
            "F": int(m.F),
            "n_clusters": int(m.n_clusters),
            "objective": float(m.objective),
            "prototype_index": _opt_list(m.prototype_index, int),
            "class_of_cluster": _opt_list(m.class_of_cluster, int),
            "eigenvalues": _opt_list(m.eigenvalues),
            "mean": _flat(m.mean),
            "gram_t": _flat(m.gram_t),
            "gram_b": _flat(m.gram_b),
            "A": _flat(m.A),
        }
    raise ValidationError(f"cannot serialize {type(m).__name__}")


def dumps_model(m: LdaModel | KernelModel) -> str:
    doc = model_to_dict(m)
    try:
        lines = [
            f"  {json.dumps(k)}: {json.dumps(v, separators=(',', ':'), allow_nan=False)}"
            for k, v in doc.items()
        ]
    except ValueError:
        raise ValidationError("model contains non-finite numbers") from None
    return "{\n" + ",\n".join(lines) + "\n}\n"


def save_model(m: LdaModel | KernelModel, path) -> Path:
    path = Path(path)
    path.write_text(dumps_model(m), encoding="utf-8")
    return path


def _missing_section(text: str) -> str:
    """Name the first field whose line is absent or cut off in a damaged file."""
    complete = set()
    for line in text.splitlines():
        m = re.match(r'^  "([A-Za-z_]+)": (.*?),?$', line)
        if not m:
            continue
        try:
            json.loads(m.group(2))
        except ValueError:
            continue
        complete.add(m.group(1))
    kind = "kernel" if '"kind": "kernel"' in text else "linear"
    for name in (KERNEL_FIELDS if kind == "kernel" else LINEAR_FIELDS):
        if name not in complete:
            return name
    return "closing brace"


def loads_model(text: str) -> LdaModel | KernelModel:
    try:
        doc = json.loads(text)
    except ValueError:
        raise ValidationError(
            f"corrupt or truncated model file: missing section {_missing_section(text)!r}"
        ) from None
    if not isinstance(doc, dict):
        raise ValidationError("model file must hold a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ValidationError(
            f"unsupported model format_version {version!r}; this version reads {FORMAT_VERSION}"
        )
    kind = doc.get("kind")
    if kind not in ("linear", "kernel"):
        raise ValidationError(f"unknown model kind {kind!r}")
    fields = LINEAR_FIELDS if kind == "linear" else KERNEL_FIELDS
    unknown = [k for k in doc if k not in fields]
    if unknown:
        raise ValidationError(
            f"unknown field(s) {unknown} for model format_version {FORMAT_VERSION}"
        )
    missing = [k for k in fields if k not in doc]
    if missing:
        raise ValidationError(f"model file is missing section {missing[0]!r}")
    try:
        return _linear_from(doc) if kind == "linear" else _kernel_from(doc)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"malformed model file: {exc}") from None


def _matrix(values, rows, cols, name):
    a = np.asarray(values, dtype=float)
    if a.size != rows * cols:
        raise ValidationError(f"section {name!r} has {a.size} numbers, expected {rows * cols}")
    return a.reshape(rows, cols)


def _linear_from(doc) -> LdaModel:
    D, F = int(doc["D"]), int(doc["F"])
    mean = np.asarray(doc["mean"], dtype=float)
    if mean.shape != (D,):
        raise ValidationError(f"section 'mean' has {mean.size} numbers, expected {D}")
    proto = doc["prototype_index"]
    coc = doc["class_of_cluster"]
    eig = doc["eigenvalues"]
    return LdaModel(
        A=_matrix(doc["A"], D, F, "A"),
        mean=mean,
        solver=str(doc["solver"]),
        mode=str(doc["mode"]),
        lam=float(doc["lambda"]),
        n_clusters=int(doc["n_clusters"]),
        objective=float(doc["objective"]),
        gram_t=_matrix(doc["gram_t"], F, F, "gram_t"),
        gram_b=_matrix(doc["gram_b"], F, F, "gram_b"),
        prototype_index=None if proto is None else tuple(int(p) for p in proto),
        eigenvalues=None if eig is None else np.asarray(eig, dtype=float),
        class_of_cluster=None if coc is None else np.asarray(coc, dtype=np.int64),
    )


def _kernel_from(doc) -> KernelModel:
    D, N, F = int(doc["D"]), int(doc["N"]), int(doc["F"])
    kd = doc["kernel"]
    if not isinstance(kd, dict) or set(kd) != set(_DESCRIPTOR_FIELDS):
        raise ValidationError(f"kernel section must have fields {_DESCRIPTOR_FIELDS}")
    desc = KernelDescriptor(
        kind=kd["kind"], sigma=float(kd["sigma"]), degree=int(kd["degree"]),
        coef=float(kd["coef"]), center=bool(kd["center"]),
    )
    cols = np.asarray(doc["k_col_means"], dtype=float)
    if cols.shape != (N,):
        raise ValidationError(f"section 'k_col_means' has {cols.size} numbers, expected {N}")
    return KernelModel(
        alphas=_matrix(doc["alphas"], N, F, "alphas"),
        X_train=_matrix(doc["X_train"], N, D, "X_train"),
        descriptor=desc,
        normalized=bool(doc["normalized"]),
        eigenvalues=np.asarray(doc["eigenvalues"], dtype=float),
        solver=str(doc["solver"]),
        k_col_means=cols,
        k_mean=float(doc["k_mean"]),
        n_clusters=int(doc["n_clusters"]),
    )


def load_model(path) -> LdaModel | KernelModel:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read model file {path}: {exc.strerror}") from None
    return loads_model(text)


# -- PGM ---------------------------------------------------------------------

def to_gray(v) -> np.ndarray:
    """Min-max map a vector to 0..255; a constant vector becomes 128."""
    v = np.asarray(v, dtype=float)
    lo, hi = float(v.min()), float(v.max())
    if hi == lo:
        return np.full(v.shape, 128, dtype=np.uint8)
    return np.rint((v - lo) / (hi - lo) * 255.0).astype(np.uint8)


def write_pgm(path, img: np.ndarray) -> Path:
    img = np.asarray(img)
    if img.ndim != 2 or img.dtype != np.uint8:
        raise ValidationError("PGM image must be a 2-D uint8 array")
    path = Path(path)
    h, w = img.shape
    path.write_bytes(f"P5\n{w} {h}\n255\n".encode("ascii") + img.tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValidationError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    if tokens[0] != b"P5" or tokens[3] != b"255":
        raise ValidationError(f"{path}: not a P5 maxval-255 PGM")
    w, h = int(tokens[1]), int(tokens[2])
    body = data[pos + 1:]
    if len(body) != w * h:
        raise ValidationError(f"{path}: expected {w * h} pixel bytes, found {len(body)}")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)


def montage(images: list[np.ndarray], cols: int | None = None) -> np.ndarray:
    """Tile equally sized images row-major on a near-square grid (empty cells black)."""
    if not images:
        raise ValidationError("no images to tile")
    h, w = images[0].shape
    n = len(images)
    cols = cols or math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    grid = np.zeros((rows * h, cols * w), dtype=np.uint8)
    for i, img in enumerate(images):
        r, c = divmod(i, cols)
        grid[r * h:(r + 1) * h, c * w:(c + 1) * w] = img
    return grid


def export_filters_pgm(m: LdaModel, height: int, width: int, path_prefix) -> list[Path]:
    """One image per feature column plus ``<prefix>_montage.pgm``.

    Columns are reshaped row-major to ``height x width``.  Returns the
    per-filter paths followed by the montage path.
    """
    A = np.asarray(m.A if isinstance(m, LdaModel) else m)
    if height < 1 or width < 1 or A.shape[0] != height * width:
        raise ValidationError(
            f"cannot reshape {A.shape[0]}-dimensional filters to {height} x {width}"
        )
    prefix = Path(path_prefix)
    if prefix.parent and not prefix.parent.exists():
        raise ValidationError(f"output directory {prefix.parent} does not exist")
    images = [to_gray(A[:, f]).reshape(height, width) for f in range(A.shape[1])]
    paths = [write_pgm(f"{prefix}_{f:04d}.pgm", img) for f, img in enumerate(images)]
    paths.append(write_pgm(f"{prefix}_montage.pgm", montage(images)))
    return paths
