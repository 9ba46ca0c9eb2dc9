"""Regularization path, k-fold cross-validation and lambda selection rules."""

from __future__ import annotations

import logging
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .exceptions import InputError
from .model import Dataset, GammaGlmProblem, lambda_max, nll
from .solver import FitResult, SolverConfig, solve

__all__ = [
    "PathConfig",
    "CvReport",
    "RULES",
    "path_lambda_max",
    "build_grid",
    "fold_partition",
    "cross_validate",
    "select_lambda",
    "select_lambda_min",
    "select_lambda_1sd",
    "select_lambda_percentile",
    "refit_on_support",
    "parallel_map",
]

logger = logging.getLogger(__name__)

RULES = ("min", "1sd", "percentile")


@dataclass(frozen=True)
class PathConfig:
    """Grid and cross-validation settings.

    ``percentile`` is the threshold used by the percentile selection rule,
    expressed on a 0-100 scale.
    """

    n_lambda: int = 100
    epsilon_ratio: float = 0.001
    n_folds: int = 10
    percentile: float = 10.0
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.n_lambda) < 2:
            raise InputError(f"n_lambda must be >= 2, got {self.n_lambda!r}")
        if not (0.0 < self.epsilon_ratio < 1.0):
            raise InputError(f"epsilon_ratio must lie in (0, 1), got {self.epsilon_ratio!r}")
        if int(self.n_folds) < 2:
            raise InputError(f"n_folds must be >= 2, got {self.n_folds!r}")
        if not (0.0 < self.percentile <= 100.0):
            raise InputError(f"percentile must lie in (0, 100], got {self.percentile!r}")


@dataclass
class CvReport:
    grid: np.ndarray
    mean_nll: np.ndarray
    sd_nll: np.ndarray
    fold_nll: np.ndarray
    folds: list
    selected: dict = field(default_factory=dict)
    flagged_folds: list = field(default_factory=list)
    line_search_activations: int = 0
    max_descent_violation: float = 0.0
    nonconverged_fits: int = 0
    percentile: float = 10.0


def parallel_map(func, items, workers=1):
    """``list(map(func, items))``, optionally spread over worker processes.

    Results always come back in input order, so the reduction that follows is
    independent of scheduling.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [func(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(int(workers), len(items))) as pool:
        return list(pool.map(func, items))


def path_lambda_max(data: Dataset, shape=1.0, alpha=1.0, unpenalized=()) -> float:
    """Top of the lambda grid, accounting for unpenalized columns.

    Without unpenalized columns this is :func:`gammanet.model.lambda_max`.
    Otherwise the unpenalized sub-model is fitted first and the threshold is
    taken from the gradient of the penalized columns at that fit.
    """
    if not unpenalized:
        return lambda_max(data, shape, alpha)
    if not (0.0 < alpha <= 1.0):
        raise InputError(f"lambda_max needs alpha in (0, 1], got {alpha!r}")
    unpen = sorted(unpenalized)
    sub = solve(GammaGlmProblem(data.columns(unpen), shape, 0.0))
    x0 = np.zeros(data.n_features)
    x0[unpen] = sub.coefficients
    g = np.abs(_kernel.gradient(data.design, data.responses, float(shape), x0))
    g[unpen] = 0.0
    gmax = float(g.max())
    lam = gmax / alpha
    while lam * alpha < gmax:
        lam = np.nextafter(lam, np.inf)
    return float(lam)


def build_grid(data: Dataset, shape=1.0, alpha=1.0, config: PathConfig | None = None,
               unpenalized=()) -> np.ndarray:
    """Ascending, log-equispaced grid from ``epsilon_ratio * lambda_max`` to ``lambda_max``."""
    cfg = config or PathConfig()
    lmax = path_lambda_max(data, shape, alpha, unpenalized)
    if lmax <= 0.0:
        raise InputError(
            "lambda_max is 0: the all-zero (null) model is already optimal for these "
            "responses, so there is no regularization path to explore"
        )
    lmin = cfg.epsilon_ratio * lmax
    grid = np.exp(np.linspace(np.log(lmin), np.log(lmax), int(cfg.n_lambda)))
    grid[0] = lmin
    grid[-1] = lmax
    return grid


def fold_partition(n_rows: int, n_folds: int, seed) -> list:
    """Random partition of row indices into folds whose sizes differ by at most one."""
    if not (2 <= n_folds <= n_rows):
        raise InputError(f"need 2 <= n_folds <= number of rows ({n_rows}), got {n_folds}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n_rows)
    return [np.sort(f) for f in np.array_split(perm, n_folds)]


def _fold_task(args):
    data, shape, alpha, unpenalized, grid, test_idx, solver = args
    m = data.n_samples
    train_mask = np.ones(m, dtype=bool)
    train_mask[test_idx] = False
    train = data.subset(np.flatnonzero(train_mask))
    test = data.subset(test_idx)
    if np.all(train.responses == 1.0):
        return None
    base = GammaGlmProblem(train, shape, 0.0, alpha, unpenalized)
    test_problem = GammaGlmProblem(test, shape)
    out = np.empty(grid.shape[0])
    acts = 0
    worst = 0.0
    stalled = 0
    x = None
    for j in range(grid.shape[0] - 1, -1, -1):
        fit = solve(base.with_lambda(grid[j]), solver, warm_start=x)
        x = fit.coefficients
        acts += fit.line_search_activations
        stalled += not fit.converged
        worst = max(worst, _descent_violation(fit))
        out[j] = nll(test_problem, x) / test.n_samples
    return out, acts, worst, stalled


def _descent_violation(fit: FitResult) -> float:
    """Largest relative increase between consecutive recorded objective values."""
    tr = np.asarray(fit.objective_trace)
    if tr.size < 2:
        return 0.0
    inc = (tr[1:] - tr[:-1]) / np.maximum(1.0, np.abs(tr[:-1]))
    return float(max(inc.max(), 0.0))


def cross_validate(data: Dataset, shape=1.0, alpha=1.0, path: PathConfig | None = None,
                   solver: SolverConfig | None = None, *, workers=1, unpenalized=(),
                   rules=RULES, grid=None) -> CvReport:
    """K-fold cross-validated held-out NLL along the lambda grid.

    One random row partition is shared by the design and the responses.
    Within each fold the grid is traversed from the largest lambda down,
    warm-starting every fit from the previous one. The held-out NLL of a
    fold is its total NLL divided by the fold size; ``mean_nll`` and
    ``sd_nll`` (sample SD) are taken across folds.

    After cross-validation the full data are refitted at the lambda chosen
    by each rule in ``rules``; those fits populate ``report.selected`` as
    ``rule -> (lambda, FitResult)``.
    """
    path = path or PathConfig()
    solver = solver or SolverConfig()
    if grid is None:
        grid = build_grid(data, shape, alpha, path, unpenalized)
    grid = np.asarray(grid, dtype=np.float64)
    folds = fold_partition(data.n_samples, int(path.n_folds), path.rng_seed)
    tasks = [(data, shape, alpha, tuple(unpenalized), grid, f, solver) for f in folds]
    results = parallel_map(_fold_task, tasks, workers)

    fold_nll = np.full((len(folds), grid.shape[0]), np.nan)
    flagged = []
    acts = 0
    worst = 0.0
    stalled = 0
    for i, res in enumerate(results):
        if res is None:
            flagged.append(i)
            continue
        fold_nll[i], a, w, n = res
        acts += a
        worst = max(worst, w)
        stalled += n
    if flagged:
        warnings.warn(
            f"folds {flagged} have all training responses equal to 1 and were skipped",
            RuntimeWarning,
            stacklevel=2,
        )
    good = fold_nll[[i for i in range(len(folds)) if i not in flagged]]
    if good.shape[0] == 0:
        raise InputError("every cross-validation fold was degenerate")
    mean = good.mean(axis=0)
    sd = good.std(axis=0, ddof=1) if good.shape[0] > 1 else np.zeros(grid.shape[0])

    report = CvReport(grid=grid, mean_nll=mean, sd_nll=sd, fold_nll=fold_nll, folds=folds,
                      flagged_folds=flagged, line_search_activations=acts,
                      max_descent_violation=worst, nonconverged_fits=stalled,
                      percentile=path.percentile)
    base = GammaGlmProblem(data, shape, 0.0, alpha, unpenalized)
    fitted = {}
    for rule in rules:
        lam = select_lambda(report, rule)
        if lam not in fitted:
            fit = solve(base.with_lambda(lam), solver)
            report.line_search_activations += fit.line_search_activations
            report.max_descent_violation = max(report.max_descent_violation,
                                               _descent_violation(fit))
            report.nonconverged_fits += not fit.converged
            fitted[lam] = fit
        report.selected[rule] = (lam, fitted[lam])
    return report


def select_lambda(report: CvReport, rule: str, percentile=None) -> float:
    if rule == "min":
        return select_lambda_min(report)
    if rule == "1sd":
        return select_lambda_1sd(report)
    if rule == "percentile":
        return select_lambda_percentile(report, report.percentile if percentile is None
                                        else percentile)
    raise InputError(f"unknown selection rule {rule!r}; expected one of {RULES}")


def _argmin_largest(values) -> int:
    values = np.asarray(values)
    best = np.min(values)
    return int(np.flatnonzero(values == best)[-1])


def select_lambda_min(report: CvReport) -> float:
    """Grid lambda with the smallest mean held-out NLL; ties go to the larger lambda."""
    return float(report.grid[_argmin_largest(report.mean_nll)])


def select_lambda_1sd(report: CvReport) -> float:
    """Largest lambda whose mean NLL is within one fold SD of the minimum."""
    j = _argmin_largest(report.mean_nll)
    bound = report.mean_nll[j] + report.sd_nll[j]
    ok = np.flatnonzero(report.mean_nll <= bound)
    return float(report.grid[ok[-1]])


def select_lambda_percentile(report: CvReport, percentile: float) -> float:
    """Largest lambda whose mean NLL is at or below a percentile of the NLL curve.

    The percentile uses linear interpolation between order statistics.
    """
    if not (0.0 < percentile <= 100.0):
        raise InputError(f"percentile must lie in (0, 100], got {percentile!r}")
    thresh = np.percentile(report.mean_nll, percentile)
    ok = np.flatnonzero(report.mean_nll <= thresh)
    if ok.size == 0:
        return select_lambda_min(report)
    return float(report.grid[ok[-1]])


def refit_on_support(data: Dataset, shape, support, solver: SolverConfig | None = None) -> FitResult:
    """Unpenalized fit on the columns in ``support``; zeros everywhere else."""
    p = data.n_features
    support = np.unique(np.asarray(support, dtype=int))
    if support.size == 0:
        warnings.warn("empty support: returning the all-zero coefficient vector",
                      RuntimeWarning, stacklevel=2)
        return FitResult(np.zeros(p), [], 0, True, 0, 0.0, [])
    if support.min() < 0 or support.max() >= p:
        raise InputError(f"support indices out of range for p={p}")
    fit = solve(GammaGlmProblem(data.columns(support), shape, 0.0), solver)
    full = np.zeros(p)
    full[support] = fit.coefficients
    fit.coefficients = full
    return fit
