"""
``ldapp`` command-line front end.

Exit status is 0 on success, 2 for invalid input and 3 for numerical
failure.  Every command that takes ``--seed`` is deterministic: rerunning
it writes byte-identical model files, reports and images.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .bench import SCENARIOS, bench, check_rows, format_tsv
from .cluster import subclass_partition
from .datasets import (SynthConfig, dataset_from_table, iris_path, load_csv,
                       synth_generate)
from .errors import NumericalError, ValidationError
from .evaluation import KernelConfig, SolverConfig, cross_validate
from .io import export_filters_pgm, load_model, model_to_dict, save_model
from .kernel import KERNEL_FITTERS, KernelDescriptor, KernelModel, kernel_objective, kernel_transform
from .scatter import Dataset
from .solvers import MODES, SOLVERS, feature_objective, fit, transform

BUILTIN_PREFIX = "builtin:"
BUILTINS = {"iris": False, "singular-iris": True}


# -- argument groups ---------------------------------------------------------

def _add_data(p, labelled=True):
    p.add_argument("--data", required=True,
                   help="CSV path, or builtin:iris / builtin:singular-iris")
    p.add_argument("--label-column", default="-1" if labelled else "none",
                   help="label column index or header name; 'none' for unlabelled input")
    p.add_argument("--no-header", action="store_true", help="the CSV has no header row")
    if labelled:
        p.add_argument("--append-label", action="store_true",
                       help="append the numeric class id as an extra feature")
        p.add_argument("--k-per-class", type=int, default=None,
                       help="split each class into K k-means subclasses")
        p.add_argument("--seed", type=int, default=0)


def _add_solver(p):
    p.add_argument("--solver", choices=SOLVERS, default="lda++")
    p.add_argument("--mode", choices=MODES, default="ldlss")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--drop-feature", type=int, default=None)


def _add_kernel(p):
    p.add_argument("--kernel", default="gaussian:1.0",
                   help="gaussian:SIGMA, linear, linear_centered or polynomial:DEG[:COEF]")
    p.add_argument("--trainer", choices=tuple(KERNEL_FITTERS), default="lda++")
    p.add_argument("--no-center", action="store_true", help="use the uncentered kernel")
    p.add_argument("--rtol", type=float, default=None)


def _add_output(p, required=False, what="output file"):
    p.add_argument("-o", "--output", required=required, default=None, help=what)


# -- helpers -----------------------------------------------------------------

def _label_arg(text):
    return None if text == "none" else text


def _read_table(args, append_label=False):
    src = args.data
    if src.startswith(BUILTIN_PREFIX):
        name = src[len(BUILTIN_PREFIX):]
        if name not in BUILTINS:
            raise ValidationError(f"unknown builtin dataset {name!r}; choose from {tuple(BUILTINS)}")
        return load_csv(iris_path(), append_label=append_label or BUILTINS[name])
    return load_csv(src, _label_arg(args.label_column), not args.no_header, append_label)


def _dataset(args) -> Dataset:
    table = _read_table(args, args.append_label)
    d = dataset_from_table(table)
    if args.k_per_class is not None:
        d = subclass_partition(d.X, d.labels, args.k_per_class, seed=args.seed)
    return d


def _emit(text: str, output) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8")


def _json(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(repr(float(v)) if not isinstance(v, (int, np.integer)) else str(v)
                       for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _descriptor(args) -> KernelDescriptor:
    return KernelDescriptor.parse(args.kernel, center=not args.no_center)


def _summary(m) -> dict:
    doc = model_to_dict(m)
    small = {k: v for k, v in doc.items() if not isinstance(v, list) or len(v) <= 64}
    return small


# -- commands ----------------------------------------------------------------

def cmd_fit(args):
    d = _dataset(args)
    m = fit(d, args.solver, args.lam, args.mode, args.rtol, args.drop_feature)
    save_model(m, args.output)
    doc = {"solver": m.solver, "mode": m.mode, "D": m.D, "F": m.F,
           "objective": m.objective, "model": str(args.output)}
    if "gate" in m.diagnostics:
        doc["gate"] = {k: (v if not isinstance(v, float) or np.isfinite(v) else None)
                       for k, v in m.diagnostics["gate"].items()}
    _emit(_json(doc), None)


def cmd_transform(args):
    m = load_model(args.model)
    X = _read_table(args).X
    Y = kernel_transform(m, X) if isinstance(m, KernelModel) else transform(m, X)
    _emit(_csv([f"f{j}" for j in range(Y.shape[1])], Y), args.output)


def cmd_eval(args):
    d = _dataset(args)
    cfg = SolverConfig(args.solver, args.mode, args.lam, args.drop_feature,
                       args.orthonormalize, args.rtol)
    rep = cross_validate(d, cfg, args.folds, args.seed, not args.no_stratify, args.jobs)
    _emit(_json(rep.to_dict()), args.output)


def cmd_kernel_fit(args):
    d = _dataset(args)
    m = KERNEL_FITTERS[args.trainer](d, _descriptor(args), rtol=args.rtol)
    if args.output:
        save_model(m, args.output)
    _emit(_json({"solver": m.solver, "kernel": m.descriptor.to_dict(), "F": m.F,
                 "eigenvalues": [float(v) for v in m.eigenvalues],
                 "objective": kernel_objective(m, d)}), None)


def cmd_kernel_eval(args):
    d = _dataset(args)
    cfg = KernelConfig(_descriptor(args), args.trainer, args.rtol, args.orthonormalize)
    rep = cross_validate(d, cfg, args.folds, args.seed, not args.no_stratify, args.jobs)
    _emit(_json(rep.to_dict()), args.output)


def cmd_cluster(args):
    if args.k_per_class is None:
        raise ValidationError("cluster needs --k-per-class")
    d = _dataset(args)
    rows = [list(x) + [int(c), int(k)] for x, c, k in zip(d.X, d.classes, d.labels)]
    header = [f"x{j}" for j in range(d.D)] + ["class", "cluster"]
    _emit(_csv(header, rows), args.output)


def cmd_synth(args):
    d = synth_generate(SynthConfig(args.samples_per_class, args.extra_dims, args.seed,
                                   args.mean_scale))
    rows = [list(x) + [int(c)] for x, c in zip(d.X, d.labels)]
    _emit(_csv([f"x{j}" for j in range(d.D)] + ["class"], rows), args.output)


def cmd_bench(args):
    dims = None
    if args.dims:
        try:
            dims = [int(x) for x in args.dims.split(",")]
        except ValueError:
            raise ValidationError(f"--dims must be comma-separated integers, got {args.dims!r}") from None
    rows = bench(args.scenario, dims, args.seed, args.repeats, args.samples_per_class)
    sys.stdout.write(format_tsv(args.scenario, rows))
    check_rows(rows)


def cmd_export_filters(args):
    m = load_model(args.model)
    if isinstance(m, KernelModel):
        raise ValidationError("filter export needs a linear model")
    paths = export_filters_pgm(m, args.height, args.width, args.prefix)
    _emit("".join(f"{p}\n" for p in paths), None)


def cmd_inspect(args):
    m = load_model(args.model)
    doc = _summary(m)
    if args.data:
        d = _dataset(args)
        doc["data_objective"] = (kernel_objective(m, d) if isinstance(m, KernelModel)
                                 else _linear_objective(m, d))
    _emit(_json(doc), None)


def _linear_objective(m, d):
    return feature_objective(transform(m, d.X), d)


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ldapp", description="Linear discriminant analysis toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a linear model and save it as JSON")
    _add_data(p)
    _add_solver(p)
    _add_output(p, required=True, what="model file")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("transform", help="apply a saved model to CSV rows")
    p.add_argument("--model", required=True)
    _add_data(p, labelled=False)
    _add_output(p, what="feature CSV (default: stdout)")
    p.set_defaults(func=cmd_transform)

    for name, kernel in (("eval", False), ("kernel-eval", True)):
        p = sub.add_parser(name, help="k-fold nearest-neighbour evaluation")
        _add_data(p)
        if kernel:
            _add_kernel(p)
        else:
            _add_solver(p)
        p.add_argument("--orthonormalize", action="store_true",
                       help="orthonormalize the features before classifying")
        p.add_argument("--folds", type=int, default=10)
        p.add_argument("--no-stratify", action="store_true")
        p.add_argument("--jobs", type=int, default=1, help="folds evaluated concurrently")
        _add_output(p, what="report JSON (default: stdout)")
        p.set_defaults(func=cmd_kernel_eval if kernel else cmd_eval)

    p = sub.add_parser("kernel-fit", help="fit a kernel model; report eigenvalues and objective")
    _add_data(p)
    _add_kernel(p)
    _add_output(p, what="model file (optional)")
    p.set_defaults(func=cmd_kernel_fit)

    p = sub.add_parser("cluster", help="split classes into k-means subclasses")
    _add_data(p)
    _add_output(p, what="CSV with class and cluster columns (default: stdout)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("synth", help="generate the three-Gaussian synthetic dataset")
    p.add_argument("--samples-per-class", type=int, default=300)
    p.add_argument("--extra-dims", type=int, default=0)
    p.add_argument("--mean-scale", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p, what="CSV (default: stdout)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="time solvers on synthetic data (TSV to stdout)")
    p.add_argument("--scenario", choices=tuple(SCENARIOS), required=True)
    p.add_argument("--dims", default=None, help="comma-separated dimensions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--samples-per-class", type=int, default=None)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-filters", help="write model columns as PGM images")
    p.add_argument("--model", required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--prefix", required=True, help="output path prefix")
    p.set_defaults(func=cmd_export_filters)

    p = sub.add_parser("inspect", help="summarize a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", default=None, help="optionally rescore on a labelled CSV")
    p.add_argument("--label-column", default="-1")
    p.add_argument("--no-header", action="store_true")
    p.set_defaults(func=cmd_inspect, append_label=False, k_per_class=None, seed=0)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ValidationError, OSError) as exc:
        print(f"ldapp: error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"ldapp: numerical failure: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
