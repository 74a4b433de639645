"""Repeated-trial experiments over random instance ensembles.

Each trial seeds its generator from (master seed, trial index), so any trial
can be reproduced in isolation and adding trials never perturbs earlier
ones.  Results are flat records with a stable CSV schema.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from qbp.admm import (
    InfeasibleProjectionError,
    SolverConfig,
    solve,
    solve_denoising,
)
from qbp.baselines import (
    IHTConfig,
    InfeasibleLinearSystemError,
    basis_pursuit,
    iterative_hard_thresholding,
    linearize,
)
from qbp.generators import fourier_sparse_image, general_quadratic, pure_phase
from qbp.recovery import DegenerateMatrixError, build_report, judge_success

__all__ = [
    "CSV_COLUMNS",
    "ExperimentSpec",
    "TrialRecord",
    "trial_seed",
    "run_trial",
    "run_monte_carlo",
    "summarize",
    "write_csv",
]

CSV_COLUMNS = (
    "trial",
    "method",
    "success",
    "error",
    "iterations",
    "wall_time_s",
    "rank_ratio",
    "note",
)

_METHODS = ("qbp", "qbp0", "qbpd", "bp", "iht")
_ENSEMBLES = ("general", "purephase", "fourier")


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: an instance ensemble, the methods to run, and knobs."""

    n: int
    N: int
    k: int
    ensemble: str = "general"
    signal: str = "binary"
    methods: tuple[str, ...] = ("qbp",)
    lam: float = 1.0
    epsilon: float = 0.0
    trials: int = 100
    seed: int = 0
    tol: float = 1e-3
    side: int = 0
    iht_max_iters: int = 1000
    solver: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.ensemble not in _ENSEMBLES:
            raise ValueError(f"unknown ensemble {self.ensemble!r}")
        if self.ensemble == "fourier" and self.side < 2:
            raise ValueError("fourier ensemble needs side >= 2")
        bad = [m for m in self.methods if m not in _METHODS]
        if bad or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {_METHODS}")
        if self.trials < 1:
            raise ValueError("trials must be positive")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    method: str
    success: bool
    error: float
    iterations: int
    wall_time_s: float
    rank_ratio: float
    note: str = ""


def trial_seed(master_seed: int, index: int) -> int:
    """Derived seed for one trial; independent across indices."""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1, np.uint64)[0])


def _make_instance(spec: ExperimentSpec, seed: int):
    if spec.ensemble == "general":
        system, x = general_quadratic(spec.n, spec.N, spec.k, spec.signal, seed)
        return system, x, False
    if spec.ensemble == "purephase":
        system, x = pure_phase(spec.n, spec.N, spec.k, spec.signal, seed)
        return system, x, True
    system, x = fourier_sparse_image(spec.side, spec.k, spec.N, seed)
    return system, x, True


_EXPECTED_FAILURES = (
    InfeasibleProjectionError,
    InfeasibleLinearSystemError,
    DegenerateMatrixError,
    np.linalg.LinAlgError,
)


def _run_method(spec: ExperimentSpec, method: str, system, x_true,
                phase_invariant: bool, index: int) -> TrialRecord:
    config = SolverConfig(**spec.solver)
    start = time.perf_counter()
    try:
        if method in ("qbp", "qbp0", "qbpd"):
            if method == "qbp":
                result = solve(system, spec.lam, config)
            elif method == "qbp0":
                result = solve(system, 0.0, config)
            else:
                result = solve_denoising(system, spec.lam, spec.epsilon, config)
            report = build_report(system, result, x_true, spec.tol, phase_invariant)
            success, error = report.success, report.error
            iterations, rank_ratio = report.iterations, report.rank_ratio
            note = "" if result.termination == "converged" else result.termination
        elif method == "bp":
            x_hat, iterations = basis_pursuit(linearize(system), full_output=True)
            success, error = judge_success(x_hat, x_true, spec.tol, phase_invariant)
            rank_ratio, note = float("nan"), ""
        else:
            x_hat, iterations, _ = iterative_hard_thresholding(
                system, IHTConfig(k=spec.k, max_iters=spec.iht_max_iters),
                full_output=True,
            )
            success, error = judge_success(x_hat, x_true, spec.tol, phase_invariant)
            rank_ratio, note = float("nan"), ""
    except _EXPECTED_FAILURES as exc:
        return TrialRecord(
            trial=index,
            method=method,
            success=False,
            error=float("inf"),
            iterations=0,
            wall_time_s=time.perf_counter() - start,
            rank_ratio=float("nan"),
            note=type(exc).__name__,
        )
    return TrialRecord(
        trial=index,
        method=method,
        success=bool(success),
        error=float(error),
        iterations=int(iterations),
        wall_time_s=time.perf_counter() - start,
        rank_ratio=float(rank_ratio),
        note=note,
    )


def run_trial(spec: ExperimentSpec, index: int) -> list[TrialRecord]:
    """Generate instance ``index`` and run every requested method on it."""
    system, x_true, phase_invariant = _make_instance(spec, trial_seed(spec.seed, index))
    return [
        _run_method(spec, method, system, x_true, phase_invariant, index)
        for method in spec.methods
    ]


def run_monte_carlo(spec: ExperimentSpec, jobs: int = 1,
                    progress=None) -> list[TrialRecord]:
    """All trials of an experiment; ``jobs > 1`` runs trials in processes."""
    records: list[TrialRecord] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for index, batch in enumerate(
                pool.map(run_trial, [spec] * spec.trials, range(spec.trials))
            ):
                records.extend(batch)
                if progress is not None:
                    progress(index)
    else:
        for index in range(spec.trials):
            records.extend(run_trial(spec, index))
            if progress is not None:
                progress(index)
    return records


def summarize(records) -> dict[str, dict]:
    """Per-method success rate and iteration/error averages."""
    out: dict[str, dict] = {}
    for record in records:
        stats = out.setdefault(
            record.method,
            {"trials": 0, "successes": 0, "iterations": 0.0, "errors": []},
        )
        stats["trials"] += 1
        stats["successes"] += int(record.success)
        stats["iterations"] += record.iterations
        if np.isfinite(record.error):
            stats["errors"].append(record.error)
    for stats in out.values():
        trials = stats["trials"]
        stats["success_rate"] = stats["successes"] / trials
        stats["mean_iterations"] = stats["iterations"] / trials
        errors = stats.pop("errors")
        stats["median_error"] = float(np.median(errors)) if errors else float("inf")
        del stats["iterations"]
    return out


def write_csv(records, target) -> None:
    """Write records to a path or an open text stream with the stable schema."""
    if isinstance(target, (str, Path)):
        with open(target, "w", encoding="utf-8", newline="") as fp:
            write_csv(records, fp)
            return
    writer = csv.writer(target)
    writer.writerow(CSV_COLUMNS)
    for r in records:
        writer.writerow(
            [
                r.trial,
                r.method,
                int(r.success),
                repr(r.error),
                r.iterations,
                repr(r.wall_time_s),
                repr(r.rank_ratio),
                r.note,
            ]
        )
