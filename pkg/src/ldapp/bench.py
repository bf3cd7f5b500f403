"""
Training-time benchmark on the synthetic three-Gaussian data.

Each row fits every solver of a scenario ``repeats`` times on one
dataset of the given dimension, records the mean wall time, and checks
that all solvers reached the same objective value.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .datasets import SynthConfig, synth_generate
from .errors import NumericalError, ValidationError
from .kernel import KernelDescriptor, fit_classical, fit_ldapp, kernel_objective
from .solvers import eig_lda, eig_ldapp, ldapp

SCENARIOS = {
    # name: (samples per class, default dims)
    "ldlss": (12_000, (256, 512, 1024, 2048, 4096, 8192)),
    "hdsss": (300, (1024, 2048, 4096, 8192, 16384, 32768)),
    "kernel": (300, (1024, 2048, 4096, 8192, 16384, 32768)),
}
KERNEL_SIGMA2 = 10.0
OBJECTIVE_RTOL = 1e-8


@dataclass(frozen=True)
class BenchRow:
    dim: int
    N: int
    seconds: dict
    objectives: dict

    @property
    def max_rel_dev(self) -> float:
        vals = np.array(list(self.objectives.values()))
        ref = np.max(np.abs(vals))
        return float((vals.max() - vals.min()) / ref) if ref > 0 else 0.0

    @property
    def agree(self) -> bool:
        return self.max_rel_dev <= OBJECTIVE_RTOL


def _solvers(scenario: str):
    if scenario == "ldlss":
        return {
            "eig-lda": lambda d: eig_lda(d, mode="ldlss").objective,
            "lda++": lambda d: ldapp(d, mode="ldlss").objective,
            "eig-lda++": lambda d: eig_ldapp(d, mode="ldlss").objective,
        }
    if scenario == "hdsss":
        return {
            "eig-lda": lambda d: eig_lda(d, mode="hdsss").objective,
            "lda++": lambda d: ldapp(d, mode="hdsss").objective,
            "eig-lda++": lambda d: eig_ldapp(d, mode="hdsss").objective,
        }
    desc = KernelDescriptor("gaussian", sigma=float(np.sqrt(KERNEL_SIGMA2)))
    return {
        "kernel-classical": lambda d: kernel_objective(fit_classical(d, desc), d),
        "kernel-lda++": lambda d: kernel_objective(fit_ldapp(d, desc), d),
    }


def bench(scenario: str, dims=None, seed: int = 0, repeats: int = 5,
          samples_per_class: int | None = None, clock=time.perf_counter) -> list[BenchRow]:
    """Time every solver of ``scenario`` on each dimension in ``dims``.

    Runs are serial so timings do not interfere.  The objective reported
    for a solver is the one from its last run (all runs are identical).
    """
    if scenario not in SCENARIOS:
        raise ValidationError(f"unknown scenario {scenario!r}; choose from {tuple(SCENARIOS)}")
    if repeats < 1:
        raise ValidationError("repeats must be at least 1")
    default_n, default_dims = SCENARIOS[scenario]
    n = default_n if samples_per_class is None else int(samples_per_class)
    dims = default_dims if dims is None else tuple(int(x) for x in dims)
    if any(x < 2 for x in dims):
        raise ValidationError("every dimension must be at least 2")
    solvers = _solvers(scenario)
    rows = []
    for dim in dims:
        d = synth_generate(SynthConfig(n, dim - 2, seed))
        seconds, objectives = {}, {}
        for name, run in solvers.items():
            total = 0.0
            for _ in range(repeats):
                t0 = clock()
                objectives[name] = float(run(d))
                total += clock() - t0
            seconds[name] = total / repeats
        rows.append(BenchRow(dim, d.N, seconds, objectives))
    return rows


def format_tsv(scenario: str, rows: list[BenchRow]) -> str:
    names = list(_solvers(scenario))
    head = ["dim", "N"] + [f"{s}_seconds" for s in names] + ["objective", "max_rel_dev", "agree"]
    lines = ["\t".join(head)]
    for r in rows:
        cells = [str(r.dim), str(r.N)] + [f"{r.seconds[s]:.4f}" for s in names]
        cells += [f"{r.objectives[names[0]]:.10f}", f"{r.max_rel_dev:.3e}", "yes" if r.agree else "no"]
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def check_rows(rows: list[BenchRow]) -> None:
    bad = [r.dim for r in rows if not r.agree]
    if bad:
        raise NumericalError(f"solver objectives disagree beyond {OBJECTIVE_RTOL} at dims {bad}")
