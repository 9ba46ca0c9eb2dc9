"""Command-line front end: ``gammanet fit | cv | simulate``.

Exit status is 0 on success, 2 for input errors (bad flags, unreadable or
malformed CSV) and 3 for numerical or solver failures.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .exceptions import GammaNetError, InputError
from .io import dumps_json, read_combined_csv, read_split_csv, write_rows
from .model import Dataset, GammaGlmProblem
from .path import RULES, PathConfig, cross_validate, path_lambda_max
from .simulation import METHODS, SimConfig, run_study
from .solver import SolverConfig, solve

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERICAL = 3

_PATH = PathConfig()
_SOLVER = SolverConfig()
_SIM = SimConfig()


def _add_model_flags(p):
    p.add_argument("--alpha", type=float, default=1.0, help="elastic-net mixing in [0, 1] (default 1)")
    p.add_argument("--shape", type=float, default=1.0, help="Gamma shape k (default 1)")
    p.add_argument("--intercept", action="store_true",
                   help="prepend an unpenalized column of ones")


def _add_solver_flags(p):
    p.add_argument("--tol", type=float, default=_SOLVER.tol)
    p.add_argument("--max-iter", type=int, default=_SOLVER.max_iter)


def _add_path_flags(p, sim=False):
    p.add_argument("--n-lambda", type=int, default=_PATH.n_lambda)
    p.add_argument("--epsilon-ratio", type=float, default=_PATH.epsilon_ratio)
    p.add_argument("--folds", type=int, default=_PATH.n_folds)
    p.add_argument("--percentile", type=float, default=_PATH.percentile,
                   help="threshold for the percentile rule, on a 0-100 scale")
    p.add_argument("--seed", type=int, default=_SIM.rng_seed if sim else _PATH.rng_seed)
    p.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")


def _add_data_flags(p):
    p.add_argument("data", nargs="?", help="combined CSV: response first, then predictors")
    p.add_argument("--design", help="design-matrix CSV (use with --response)")
    p.add_argument("--response", help="single-column response CSV (use with --design)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gammanet",
        description="Elastic-net regularized Gamma GLM: fit, cross-validate, simulate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit at a fixed lambda")
    _add_data_flags(fit)
    _add_model_flags(fit)
    fit.add_argument("--lambda", dest="lam", type=float, default=0.0,
                     help="regularization strength (default 0, unpenalized)")
    _add_solver_flags(fit)
    fit.add_argument("--out", help="write model JSON here instead of stdout")

    cv = sub.add_parser("cv", help="cross-validate the lambda path and refit")
    _add_data_flags(cv)
    _add_model_flags(cv)
    _add_path_flags(cv)
    cv.add_argument("--rule", choices=RULES, default="min")
    _add_solver_flags(cv)
    cv.add_argument("--out-dir", default=".", help="directory for cv_report.json and path.csv")

    sim = sub.add_parser("simulate", help="Monte-Carlo variable-selection study")
    sim.add_argument("--runs", type=int, default=_SIM.n_runs)
    sim.add_argument("--n", type=int, default=_SIM.n)
    sim.add_argument("--p", type=int, default=_SIM.p)
    sim.add_argument("--zeros", type=int, default=_SIM.n_zeros)
    sim.add_argument("--shape", type=float, default=_SIM.shape)
    sim.add_argument("--alpha", type=float, default=_SIM.alpha)
    _add_path_flags(sim, sim=True)
    _add_solver_flags(sim)
    sim.add_argument("--out-dir", default=".", help="directory for the output tables")
    return parser


def _load(args) -> Dataset:
    if args.data and (args.design or args.response):
        raise InputError("give either a combined CSV or --design/--response, not both")
    if args.data:
        data = read_combined_csv(args.data)
    elif args.design and args.response:
        data = read_split_csv(args.design, args.response)
    else:
        raise InputError("missing input: give a combined CSV or both --design and --response")
    if args.intercept:
        data = Dataset(np.column_stack([np.ones(data.n_samples), data.design]), data.responses)
    return data


def _unpenalized(args):
    return (0,) if args.intercept else ()


def _fit_summary(fit):
    return {
        "coefficients": fit.coefficients,
        "objective": fit.objective,
        "iterations": fit.iterations,
        "converged": bool(fit.converged),
        "line_search_activations": fit.line_search_activations,
        "gradient_mapping": fit.gradient_mapping,
        "residual": fit.residual,
    }


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def cmd_fit(args) -> int:
    data = _load(args)
    problem = GammaGlmProblem(data, args.shape, args.lam, args.alpha, _unpenalized(args))
    fit = solve(problem, SolverConfig(tol=args.tol, max_iter=args.max_iter))
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": "fit",
        "n_samples": data.n_samples,
        "n_features": data.n_features,
        "intercept": bool(args.intercept),
        "shape": args.shape,
        "alpha": args.alpha,
        "lambda": args.lam,
        **_fit_summary(fit),
    }
    text = dumps_json(out)
    if args.out:
        _write(args.out, text)
    else:
        sys.stdout.write(text)
    if not fit.converged:
        print(f"warning: not converged after {fit.iterations} iterations "
              f"(gradient mapping {fit.gradient_mapping:.3g})", file=sys.stderr)
    return EXIT_OK


def cmd_cv(args) -> int:
    data = _load(args)
    path = PathConfig(args.n_lambda, args.epsilon_ratio, args.folds, args.percentile, args.seed)
    solver = SolverConfig(tol=args.tol, max_iter=args.max_iter)
    unpen = _unpenalized(args)
    if args.folds > data.n_samples:
        raise InputError(f"--folds {args.folds} exceeds the number of rows ({data.n_samples})")
    lmax = path_lambda_max(data, args.shape, args.alpha, unpen)
    report = cross_validate(data, args.shape, args.alpha, path, solver, workers=args.workers,
                            unpenalized=unpen, rules=(args.rule,))
    lam, fit = report.selected[args.rule]
    os.makedirs(args.out_dir, exist_ok=True)
    out = {
        "schema_version": SCHEMA_VERSION,
        "command": "cv",
        "n_samples": data.n_samples,
        "n_features": data.n_features,
        "intercept": bool(args.intercept),
        "shape": args.shape,
        "alpha": args.alpha,
        "n_lambda": args.n_lambda,
        "epsilon_ratio": args.epsilon_ratio,
        "folds": args.folds,
        "seed": args.seed,
        "rule": args.rule,
        "percentile": args.percentile,
        "lambda_max": lmax,
        "lambda": lam,
        "lambda_index": int(np.flatnonzero(report.grid == lam)[0]),
        **_fit_summary(fit),
        "flagged_folds": report.flagged_folds,
        "path_line_search_activations": report.line_search_activations,
        "path_nonconverged_fits": report.nonconverged_fits,
        "max_descent_violation": report.max_descent_violation,
        "grid": report.grid,
        "mean_nll": report.mean_nll,
        "sd_nll": report.sd_nll,
    }
    _write(os.path.join(args.out_dir, "cv_report.json"), dumps_json(out))
    write_rows(os.path.join(args.out_dir, "path.csv"), ["lambda", "mean_nll", "sd_nll"],
               zip(report.grid, report.mean_nll, report.sd_nll))
    print(f"lambda_max = {lmax:.17g}")
    print(f"selected lambda ({args.rule}) = {lam:.17g}")
    print(f"nonzero coefficients: {int(np.count_nonzero(fit.coefficients))} of {data.n_features}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    path = PathConfig(args.n_lambda, args.epsilon_ratio, args.folds, args.percentile, 0)
    solver = SolverConfig(tol=args.tol, max_iter=args.max_iter)
    config = SimConfig(n_runs=args.runs, n=args.n, p=args.p, n_zeros=args.zeros,
                       shape=args.shape, alpha=args.alpha, rng_seed=args.seed,
                       path=path, solver=solver)
    report = run_study(config, workers=args.workers)
    os.makedirs(args.out_dir, exist_ok=True)
    write_rows(os.path.join(args.out_dir, "table3.csv"), ["method", "error.L1", "%error.L1"],
               report.table3())
    write_rows(os.path.join(args.out_dir, "table4.csv"),
               ["method", "zeros.correct", "nonzeros.correct"], report.table4())
    write_rows(os.path.join(args.out_dir, "histogram.csv"), ["method", "zeros.correct", "count"],
               report.histogram_rows())
    _write(os.path.join(args.out_dir, "report.json"),
           dumps_json({"schema_version": SCHEMA_VERSION, "command": "simulate",
                       **report.to_dict()}))
    width = max(map(len, METHODS))
    print(f"{'method':<{width}}  {'error.L1':>9} {'%error.L1':>9}  {'zeros':>6} {'nonzeros':>8}")
    for (m, e, pe), (_, z, nz) in zip(report.table3(), report.table4()):
        print(f"{m:<{width}}  {e:9.4f} {pe:9.2f}  {z:6.3f} {nz:8.3f}")
    print(f"completed runs: {report.n_runs_completed}/{config.n_runs}")
    if report.failed_runs:
        print(f"warning: {len(report.failed_runs)} runs failed", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {"fit": cmd_fit, "cv": cmd_cv, "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    if args.command in ("fit", "cv") and not (args.data or args.design or args.response):
        parser.error(f"{args.command}: missing input CSV (positional, or --design with --response)")
    try:
        return _COMMANDS[args.command](args)
    except InputError as exc:
        print(f"gammanet {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GammaNetError as exc:
        print(f"gammanet {args.command}: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
