"""Monte-Carlo variable-selection study for the elastic-net Gamma GLM.

Each run draws a standard-normal design, a sparse standard-normal truth and
Gamma responses with mean ``exp(A @ x_true)``; six estimators are then
compared on coefficient error and support recovery.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import GammaNetError, InputError
from .model import Dataset, GammaGlmProblem
from .path import PathConfig, _descent_violation, cross_validate, parallel_map, refit_on_support
from .solver import SolverConfig, solve

__all__ = [
    "METHODS",
    "SimConfig",
    "SimTruth",
    "RunOutcome",
    "Metrics",
    "SimulationReport",
    "sample_responses",
    "generate_run",
    "run_methods",
    "compute_metrics",
    "run_study",
]

METHODS = (
    "glmGamma",
    "glmGammaNet",
    "glmGammaNet.percentile",
    "glmGammaNet.1sd",
    "glmGammaNet.percentile.nonzero",
    "glmGammaNet.1sd.nonzero",
)
# Methods whose support is a variable-selection outcome.
SELECTION_METHODS = METHODS[:4]

_MAX_REDRAWS = 100


@dataclass(frozen=True)
class SimConfig:
    n_runs: int = 1000
    n: int = 100
    p: int = 15
    n_zeros: int = 10
    shape: float = 1.0
    alpha: float = 1.0
    rng_seed: int = 0
    zero_tol: float = 1e-10
    path: PathConfig = field(default_factory=PathConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        if int(self.n_runs) < 1:
            raise InputError(f"n_runs must be >= 1, got {self.n_runs!r}")
        if int(self.p) < 1 or int(self.n) < 1:
            raise InputError(f"n and p must be >= 1, got n={self.n!r}, p={self.p!r}")
        if not (0 <= int(self.n_zeros) <= int(self.p)):
            raise InputError(f"n_zeros must lie in [0, p={self.p}], got {self.n_zeros!r}")
        if not self.shape > 0:
            raise InputError(f"shape must be positive, got {self.shape!r}")
        if int(self.path.n_folds) > int(self.n):
            raise InputError(f"n_folds={self.path.n_folds} exceeds n={self.n}")


@dataclass(frozen=True, eq=False)
class SimTruth:
    x_true: np.ndarray
    b_true: np.ndarray
    rate_true: np.ndarray
    redraws: int = 0


class Metrics(NamedTuple):
    error_l1: float
    pct_error_l1: float | None
    zeros_correct: int
    nonzeros_correct: int


@dataclass
class RunOutcome:
    coefficients: dict
    lambdas: dict
    line_search_activations: int
    max_descent_violation: float
    nonconverged_fits: int = 0


def sample_responses(rng: np.random.Generator, b_true, shape: float) -> np.ndarray:
    """Gamma draws with mean ``b_true`` and variance ``b_true**2 / shape``.

    Uses numpy's Gamma generator (Marsaglia-Tsang squeeze/rejection, with
    the usual boost for ``shape < 1``) at scale ``b_true / shape``, i.e.
    rate ``shape / b_true``.
    """
    b_true = np.asarray(b_true, dtype=np.float64)
    return rng.gamma(shape=shape, scale=b_true / shape)


def generate_run(config: SimConfig, run_index: int):
    """Draw one synthetic dataset; fully determined by ``(rng_seed, run_index)``.

    Returns
    -------
    (Dataset, SimTruth)
    """
    k = float(config.shape)
    for attempt in range(_MAX_REDRAWS):
        rng = np.random.default_rng([int(config.rng_seed), int(run_index), attempt])
        A = rng.standard_normal((config.n, config.p))
        x_true = rng.standard_normal(config.p)
        x_true[rng.choice(config.p, size=config.n_zeros, replace=False)] = 0.0
        with np.errstate(over="ignore"):
            b_true = np.exp(A @ x_true)
        if not np.all(np.isfinite(b_true)):
            continue
        rate = k / b_true
        b = sample_responses(rng, b_true, k)
        if not np.all((b > 0) & np.isfinite(b)):
            continue
        return Dataset(A, b), SimTruth(x_true, b_true, rate, attempt)
    raise GammaNetError(f"run {run_index}: no finite draw after {_MAX_REDRAWS} attempts")


def run_methods(data: Dataset, truth: SimTruth, config: SimConfig, run_index: int = 0) -> RunOutcome:
    """Fit the six estimators of the study to one dataset.

    ``glmGamma`` is the unpenalized fit. The three ``glmGammaNet`` variants
    share one cross-validation and differ only in the lambda rule. The
    ``.nonzero`` variants refit without penalty on the support of their
    parent fit.
    """
    k = config.shape
    path = PathConfig(
        n_lambda=config.path.n_lambda,
        epsilon_ratio=config.path.epsilon_ratio,
        n_folds=config.path.n_folds,
        percentile=config.path.percentile,
        rng_seed=(int(config.rng_seed), int(run_index), truth.redraws, 1),
    )
    plain = solve(GammaGlmProblem(data, k, 0.0), config.solver)
    report = cross_validate(data, k, config.alpha, path, config.solver, workers=1)
    acts = plain.line_search_activations + report.line_search_activations
    worst = max(report.max_descent_violation, _descent_violation(plain))
    stalled = report.nonconverged_fits + (not plain.converged)
    coefs = {"glmGamma": plain.coefficients}
    lambdas = {"glmGamma": 0.0}
    for name, rule in (("glmGammaNet", "min"), ("glmGammaNet.percentile", "percentile"),
                       ("glmGammaNet.1sd", "1sd")):
        lam, fit = report.selected[rule]
        coefs[name] = fit.coefficients
        lambdas[name] = lam
    for parent in ("glmGammaNet.percentile", "glmGammaNet.1sd"):
        support = np.flatnonzero(np.abs(coefs[parent]) > config.zero_tol)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            refit = refit_on_support(data, k, support, config.solver)
        coefs[parent + ".nonzero"] = refit.coefficients
        lambdas[parent + ".nonzero"] = 0.0
        acts += refit.line_search_activations
        worst = max(worst, _descent_violation(refit))
        stalled += not refit.converged
    return RunOutcome(coefs, lambdas, acts, worst, stalled)


def compute_metrics(estimate, truth: SimTruth, zero_tol: float = 1e-10) -> Metrics:
    """L1 coefficient error, its percentage of ``||x_true||_1``, and support counts."""
    est = np.asarray(estimate, dtype=np.float64)
    xt = truth.x_true
    if est.shape != xt.shape:
        raise InputError(f"estimate has shape {est.shape}, truth has {xt.shape}")
    err = float(np.sum(np.abs(est - xt)))
    norm = float(np.sum(np.abs(xt)))
    pct = 100.0 * err / norm if norm > 0 else None
    est_zero = np.abs(est) <= zero_tol
    true_zero = xt == 0
    return Metrics(err, pct, int(np.sum(true_zero & est_zero)), int(np.sum(~true_zero & ~est_zero)))


@dataclass
class SimulationReport:
    """Aggregated study results.

    ``per_run`` maps each method to an ``(n_runs_completed, 4)`` array of
    ``error.L1, %error.L1, zeros.correct, nonzeros.correct`` in run order.
    ``histogram`` maps each method to counts of ``zeros.correct`` values
    ``0 .. n_zeros``.
    """

    config: SimConfig
    run_indices: list
    per_run: dict
    histogram: dict
    failed_runs: list
    line_search_activations: int
    max_descent_violation: float
    redraws: int
    nonconverged_fits: int = 0

    @property
    def n_runs_completed(self) -> int:
        return len(self.run_indices)

    def mean(self, method: str, column: str) -> float:
        col = {"error.L1": 0, "%error.L1": 1, "zeros.correct": 2, "nonzeros.correct": 3}[column]
        vals = self.per_run[method][:, col]
        return float(np.nanmean(vals)) if vals.size else float("nan")

    def table3(self):
        """Rows ``(method, mean error.L1, mean %error.L1)``."""
        return [(m, self.mean(m, "error.L1"), self.mean(m, "%error.L1")) for m in METHODS]

    def table4(self):
        """Rows ``(method, mean zeros.correct, mean nonzeros.correct)``."""
        return [(m, self.mean(m, "zeros.correct"), self.mean(m, "nonzeros.correct"))
                for m in METHODS]

    def histogram_rows(self):
        return [(m, v, int(c)) for m in METHODS for v, c in enumerate(self.histogram[m])]

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "config": {
                "n_runs": cfg.n_runs, "n": cfg.n, "p": cfg.p, "n_zeros": cfg.n_zeros,
                "shape": cfg.shape, "alpha": cfg.alpha, "rng_seed": cfg.rng_seed,
                "zero_tol": cfg.zero_tol, "n_lambda": cfg.path.n_lambda,
                "epsilon_ratio": cfg.path.epsilon_ratio, "n_folds": cfg.path.n_folds,
                "percentile": cfg.path.percentile,
            },
            "n_runs_completed": self.n_runs_completed,
            "failed_runs": [{"run": i, "error": msg} for i, msg in self.failed_runs],
            "line_search_activations": self.line_search_activations,
            "max_descent_violation": self.max_descent_violation,
            "redraws": self.redraws,
            "nonconverged_fits": self.nonconverged_fits,
            "methods": {
                m: {
                    "error.L1": self.mean(m, "error.L1"),
                    "%error.L1": self.mean(m, "%error.L1"),
                    "zeros.correct": self.mean(m, "zeros.correct"),
                    "nonzeros.correct": self.mean(m, "nonzeros.correct"),
                    "zeros.correct.histogram": [int(c) for c in self.histogram[m]],
                }
                for m in METHODS
            },
        }


def _run_one(args):
    config, idx = args
    try:
        data, truth = generate_run(config, idx)
        out = run_methods(data, truth, config, idx)
    except GammaNetError as exc:
        return idx, None, f"{type(exc).__name__}: {exc}"
    rows = {m: compute_metrics(out.coefficients[m], truth, config.zero_tol) for m in METHODS}
    diag = (out.line_search_activations, out.max_descent_violation, truth.redraws,
            out.nonconverged_fits)
    return idx, (rows, diag), None


def run_study(config: SimConfig, workers: int = 1, progress=None) -> SimulationReport:
    """Run ``config.n_runs`` independent simulations and aggregate the metrics.

    Runs are independent tasks seeded by ``(rng_seed, run_index)`` and
    reduced in run order, so the report does not depend on ``workers``.
    Runs that raise a solver or numerical error are excluded and listed in
    ``failed_runs``.
    """
    tasks = [(config, i) for i in range(int(config.n_runs))]
    results = parallel_map(_run_one, tasks, workers)
    done, failed = [], []
    per_run = {m: [] for m in METHODS}
    acts, worst, redraws, stalled = 0, 0.0, 0, 0
    for idx, payload, err in results:
        if payload is None:
            failed.append((idx, err))
            continue
        rows, (a, w, r, n) = payload
        done.append(idx)
        acts += a
        worst = max(worst, w)
        redraws += r
        stalled += n
        for m in METHODS:
            met = rows[m]
            per_run[m].append((met.error_l1, np.nan if met.pct_error_l1 is None
                               else met.pct_error_l1, met.zeros_correct, met.nonzeros_correct))
        if progress is not None:
            progress(idx)
    per_run = {m: np.array(v, dtype=np.float64).reshape(-1, 4) for m, v in per_run.items()}
    hist = {m: np.bincount(per_run[m][:, 2].astype(int), minlength=config.n_zeros + 1)
            for m in METHODS}
    return SimulationReport(config, done, per_run, hist, failed, acts, worst, redraws, stalled)
