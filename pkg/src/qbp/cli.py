"""Command-line interface.

Subcommands: ``generate`` random instances, ``solve`` one instance,
``montecarlo`` repeated trials to CSV, ``diagnose`` recoverability of an
instance, ``phantom`` the image-recovery pipeline.  Exit codes: 0 success,
1 usage or input error, 2 solver failure.  Set ``QBP_LOG=debug|info`` for
solver progress on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

from qbp.admm import (
    InfeasibleProjectionError,
    SolverConfig,
    solve,
    solve_denoising,
)
from qbp.baselines import InfeasibleLinearSystemError
from qbp.generators import (
    fourier_basis,
    fourier_sparse_image,
    general_quadratic,
    phantom_instance,
    pure_phase,
)
from qbp.model import DimensionMismatchError, NonFiniteValueError
from qbp.montecarlo import ExperimentSpec, run_monte_carlo, summarize, write_csv
from qbp.recovery import (
    DegenerateMatrixError,
    align_phase,
    build_report,
    certify_coherence,
    sample_rip,
)
from qbp.serialize import (
    InstanceFormatError,
    load_system,
    report_to_dict,
    save_system,
    vector_from_pairs,
    vector_to_pairs,
)

logger = logging.getLogger(__name__)

_INPUT_ERRORS = (
    InstanceFormatError,
    DimensionMismatchError,
    NonFiniteValueError,
    OSError,
)
_SOLVER_ERRORS = (
    InfeasibleProjectionError,
    InfeasibleLinearSystemError,
    DegenerateMatrixError,
    np.linalg.LinAlgError,
)


class _Parser(argparse.ArgumentParser):
    # usage problems exit with code 1, not argparse's default 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _solver_options(parser):
    group = parser.add_argument_group("solver options")
    group.add_argument("--rho0", type=float, default=1.0, help="initial penalty")
    group.add_argument("--eps-abs", type=float, default=1e-3, help="absolute stopping tolerance")
    group.add_argument("--eps-rel", type=float, default=1e-3, help="relative stopping tolerance")
    group.add_argument("--max-iters", type=int, default=10000, help="iteration cap")


def _config_from(args) -> SolverConfig:
    return SolverConfig(
        rho0=args.rho0,
        eps_abs=args.eps_abs,
        eps_rel=args.eps_rel,
        max_iters=args.max_iters,
    )


def _read_system(path):
    if path in (None, "-"):
        return load_system(sys.stdin)
    return load_system(path)


def _write_json(obj, path) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    if path in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(path, "w", encoding="utf-8") as fp:
            fp.write(text + "\n")


def _cmd_generate(args) -> int:
    if args.ensemble == "general":
        system, x = general_quadratic(args.n, args.N, args.k, args.signal, args.seed)
    elif args.ensemble == "purephase":
        system, x = pure_phase(args.n, args.N, args.k, args.signal, args.seed)
    else:
        system, x = fourier_sparse_image(args.side, args.k, args.N, args.seed)
    if args.output in (None, "-"):
        save_system(system, sys.stdout)
    else:
        save_system(system, args.output)
    if args.truth:
        _write_json({"n": system.n, "x": vector_to_pairs(x)}, args.truth)
    logger.info("generated %s instance: n=%d N=%d k=%d seed=%d",
                args.ensemble, system.n, args.N, args.k, args.seed)
    return 0


def _cmd_solve(args) -> int:
    if args.mode == "qbpd" and args.epsilon is None:
        print("qbp: error: --mode qbpd requires --epsilon", file=sys.stderr)
        return 1
    system = _read_system(args.instance)
    config = _config_from(args)
    start = time.perf_counter()
    if args.epsilon is not None:
        result = solve_denoising(system, args.lam, args.epsilon, config)
        mode = "qbpd"
    else:
        result = solve(system, args.lam, config)
        mode = "qbp"
    wall = time.perf_counter() - start
    x_true = None
    if args.truth:
        with open(args.truth, "r", encoding="utf-8") as fp:
            x_true = vector_from_pairs(json.load(fp).get("x"), "x")
    report = build_report(
        system, result, x_true, args.tol, phase_invariant=not args.exact_phase
    )
    _write_json(
        report_to_dict(
            report,
            mode=mode,
            beta=result.beta,
            data_residual=result.data_residual,
            wall_time_s=wall,
        ),
        args.output,
    )
    logger.info("solve finished: %s after %d iterations (%.2fs)",
                result.termination, result.iterations, wall)
    return 0


def _parse_methods(text: str) -> tuple[str, ...]:
    return tuple(m.strip() for m in text.split(",") if m.strip())


def _cmd_montecarlo(args) -> int:
    spec = ExperimentSpec(
        n=args.n,
        N=args.N,
        k=args.k,
        ensemble=args.ensemble,
        signal=args.signal,
        methods=_parse_methods(args.methods),
        lam=args.lam,
        epsilon=args.epsilon if args.epsilon is not None else 0.0,
        trials=args.trials,
        seed=args.seed,
        tol=args.tol,
        side=args.side,
        iht_max_iters=args.iht_max_iters,
        solver={
            "rho0": args.rho0,
            "eps_abs": args.eps_abs,
            "eps_rel": args.eps_rel,
            "max_iters": args.max_iters,
        },
    )
    records = run_monte_carlo(spec, jobs=args.jobs)
    if args.out in (None, "-"):
        write_csv(records, sys.stdout)
        stats_stream = sys.stderr
    else:
        write_csv(records, args.out)
        stats_stream = sys.stdout
    for method, stats in summarize(records).items():
        print(
            f"{method}: {stats['successes']}/{stats['trials']} recovered"
            f" (rate {stats['success_rate']:.2f},"
            f" median error {stats['median_error']:.3e},"
            f" mean iterations {stats['mean_iterations']:.0f})",
            file=stats_stream,
        )
    return 0


def _cmd_diagnose(args) -> int:
    system = _read_system(args.instance)
    config = _config_from(args)
    result = solve(system, args.lam, config)
    cert = certify_coherence(system, result.Z)
    rip_k = args.rip_k if args.rip_k else min(4, (system.n + 1) ** 2)
    rip = sample_rip(system, rip_k, args.rip_samples, args.seed)
    _write_json(
        {
            "coherence": {
                "mu": cert.mu,
                "bound": cert.bound if math.isfinite(cert.bound) else None,
                "cardinality": cert.cardinality,
                "rank_ratio": cert.rank_ratio,
                "certified": cert.certified,
                "skipped_columns": cert.skipped_columns,
            },
            "rip": {
                "k": rip.k,
                "samples": rip.samples,
                "epsilon": rip.epsilon,
                "epsilon_l1": rip.epsilon_l1,
            },
            "solve": {
                "lambda": args.lam,
                "iterations": result.iterations,
                "termination": result.termination,
            },
        },
        args.output,
    )
    return 0


def _cmd_phantom(args) -> int:
    side = args.side
    n = side * side
    N = args.N if args.N else 2 * n
    system, x_true = phantom_instance(side, args.k, N, args.seed)
    config = _config_from(args)
    start = time.perf_counter()
    if args.epsilon is not None:
        result = solve_denoising(system, args.lam, args.epsilon, config)
    else:
        result = solve(system, args.lam, config)
    wall = time.perf_counter() - start
    report = build_report(system, result, x_true, args.tol, phase_invariant=True)
    basis = fourier_basis(side)
    truth_img = (basis @ x_true).real.reshape(side, side)
    aligned = align_phase(report.x_hat, x_true)
    recon_img = (basis @ aligned).real.reshape(side, side)
    rows = ["row,col,truth,recovered,abs_error"]
    for r in range(side):
        for c in range(side):
            t, v = float(truth_img[r, c]), float(recon_img[r, c])
            rows.append(f"{r},{c},{t!r},{v!r},{abs(t - v)!r}")
    text = "\n".join(rows) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
        stream = sys.stderr
    else:
        with open(args.out, "w", encoding="utf-8") as fp:
            fp.write(text)
        stream = sys.stdout
    err = np.abs(truth_img - recon_img)
    beta_note = f"beta={result.beta:g}, " if result.beta is not None else ""
    print(
        f"phantom side={side} k={args.k} N={N}: {result.termination}"
        f" ({beta_note}{result.iterations} iterations, {wall:.1f}s),"
        f" pixel error mean {err.mean():.3e} max {err.max():.3e},"
        f" rank ratio {report.rank_ratio:.3e}",
        file=stream,
    )
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="qbp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a random instance as JSON")
    gen.add_argument("--ensemble", choices=("general", "purephase", "fourier"),
                     default="general")
    gen.add_argument("-n", "--n", type=int, default=20, help="signal dimension")
    gen.add_argument("-N", "--N", type=int, default=25,
                     help="number of measurements")
    gen.add_argument("-k", "--k", type=int, default=3, help="signal sparsity")
    gen.add_argument("--signal", choices=("binary", "gaussian"), default="binary")
    gen.add_argument("--side", type=int, default=4, help="image side (fourier)")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", help="instance path (default stdout)")
    gen.add_argument("--truth", help="also write the planted signal here")
    gen.set_defaults(func=_cmd_generate)

    slv = sub.add_parser("solve", help="solve one instance and report the recovery")
    slv.add_argument("instance", nargs="?", help="instance path (default stdin)")
    slv.add_argument("--lambda", "--lam", dest="lam", type=float, default=1.0,
                     help="l1 weight")
    slv.add_argument("--mode", choices=("qbp", "qbpd"), default="qbp",
                     help="equality-constrained or residual-budget program")
    slv.add_argument("--epsilon", type=float, default=None,
                     help="residual budget; implies --mode qbpd")
    slv.add_argument("--truth", help="planted-signal JSON to score against")
    slv.add_argument("--tol", type=float, default=1e-3, help="success threshold")
    slv.add_argument("--exact-phase", action="store_true",
                     help="score without global-phase alignment")
    slv.add_argument("--seed", type=int, default=0,
                     help="ignored; solves are deterministic")
    slv.add_argument("-o", "--output", help="report path (default stdout)")
    _solver_options(slv)
    slv.set_defaults(func=_cmd_solve)

    mc = sub.add_parser("montecarlo", help="run repeated trials and write CSV records")
    mc.add_argument("--ensemble", choices=("general", "purephase", "fourier"),
                    default="general")
    mc.add_argument("-n", "--n", type=int, default=20)
    mc.add_argument("-N", "--N", type=int, default=25)
    mc.add_argument("-k", "--k", type=int, default=3)
    mc.add_argument("--signal", choices=("binary", "gaussian"), default="binary")
    mc.add_argument("--side", type=int, default=0)
    mc.add_argument("--methods", default="qbp,qbp0,bp,iht",
                    help="comma list from qbp,qbp0,qbpd,bp,iht")
    mc.add_argument("--lambda", "--lam", dest="lam", type=float, default=50.0)
    mc.add_argument("--epsilon", type=float, default=None,
                    help="residual budget for the qbpd method")
    mc.add_argument("--trials", type=int, default=100)
    mc.add_argument("--seed", type=int, default=0)
    mc.add_argument("--tol", type=float, default=1e-3)
    mc.add_argument("--iht-max-iters", type=int, default=1000,
                    help="iteration budget for the iht method")
    mc.add_argument("--jobs", type=int, default=1)
    mc.add_argument("-o", "--out", help="CSV path (default stdout)")
    _solver_options(mc)
    mc.set_defaults(func=_cmd_montecarlo)

    diag = sub.add_parser("diagnose", help="recoverability diagnostics for an instance")
    diag.add_argument("instance", nargs="?", help="instance path (default stdin)")
    diag.add_argument("--lambda", "--lam", dest="lam", type=float, default=1.0)
    diag.add_argument("--rip-k", type=int, default=0,
                      help="sparsity level for isometry sampling")
    diag.add_argument("--rip-samples", type=int, default=200)
    diag.add_argument("--seed", type=int, default=0)
    diag.add_argument("-o", "--output", help="report path (default stdout)")
    _solver_options(diag)
    diag.set_defaults(func=_cmd_diagnose)

    ph = sub.add_parser("phantom", help="recover a piecewise-constant test image")
    ph.add_argument("--side", type=int, default=8)
    ph.add_argument("-k", "--k", type=int, default=10,
                    help="kept Fourier coefficients")
    ph.add_argument("-N", "--N", type=int, default=0,
                    help="measurements (default 2 * side^2)")
    ph.add_argument("--lambda", "--lam", dest="lam", type=float, default=1.0,
                    help="l1 weight")
    ph.add_argument("--epsilon", type=float, default=None,
                    help="residual budget; switches to the denoising solver")
    ph.add_argument("--tol", type=float, default=1e-3)
    ph.add_argument("--seed", type=int, default=0)
    ph.add_argument("-o", "--out", help="per-pixel CSV path (default stdout)")
    _solver_options(ph)
    ph.set_defaults(func=_cmd_phantom, eps_abs=1e-5, eps_rel=1e-5, max_iters=40000)

    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("QBP_LOG", "").strip().upper()
    if level_name:
        level = getattr(logging, level_name, logging.WARNING)
        logging.basicConfig(
            level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
        )


def main(argv=None) -> int:
    _configure_logging()
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"qbp: error: {exc}", file=sys.stderr)
        return 1
    except _SOLVER_ERRORS as exc:
        print(f"qbp: solver error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"qbp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
