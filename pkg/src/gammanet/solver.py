"""Accelerated proximal gradient (FISTA) for the elastic-net Gamma GLM.

The step size is the reciprocal of a curvature bound re-estimated at every
momentum point. A safeguard doubles the bound, and restarts the momentum
sequence, whenever a step fails to decrease the objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernel
from .exceptions import InputError, SolverError
from .model import GammaGlmProblem, curvature_floor, nll_constant

__all__ = ["SolverConfig", "FitResult", "solve", "objective", "fixed_point_residual",
           "gradient_mapping"]


@dataclass(frozen=True)
class SolverConfig:
    """Stopping and safeguard settings.

    Parameters
    ----------
    tol : float
        Sup-norm tolerance on the gradient mapping
        ``L * (x - prox(x - grad / L))`` divided by ``k * m``, with ``L`` the
        curvature bound at ``x``. For an unpenalized fit this is the
        per-observation gradient.
    max_iter : int
    line_search_backtrack : float
        Factor applied to the step size on each safeguard activation.
    line_search_max : int
        Activations allowed within one iteration before giving up.
    descent_tol : float
        Relative slack (times ``max(1, |H|)``) tolerated when checking that
        a step does not increase the objective.
    """

    tol: float = 1e-7
    max_iter: int = 10000
    line_search_backtrack: float = 0.5
    line_search_max: int = 60
    descent_tol: float = 1e-15

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError(f"tol must be positive, got {self.tol!r}")
        if int(self.max_iter) < 1:
            raise InputError(f"max_iter must be >= 1, got {self.max_iter!r}")
        if not (0.0 < self.line_search_backtrack < 1.0):
            raise InputError("line_search_backtrack must lie in (0, 1)")
        if int(self.line_search_max) < 1:
            raise InputError("line_search_max must be >= 1")


@dataclass
class FitResult:
    coefficients: np.ndarray
    objective_trace: list
    iterations: int
    converged: bool
    line_search_activations: int
    residual: float
    gradient_mapping: float = 0.0
    momentum_trace: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


class _Kernel:
    """Problem data laid out for the compiled loop."""

    def __init__(self, problem: GammaGlmProblem):
        data = problem.data
        self.A = np.ascontiguousarray(data.design)
        self.AF = np.asfortranarray(data.design)
        self.b = np.ascontiguousarray(data.responses)
        self.k = problem.shape
        self.const = nll_constant(data, problem.shape)
        self.fro2 = float(np.sum(data.design**2))
        self.floor = curvature_floor(data)
        self.lam = problem.lam
        self.alpha = problem.alpha
        w = problem.penalty_weights()
        self.w = np.ones(data.n_features) if w is None else w

    def evaluate(self, x):
        m, p = self.A.shape
        g = np.empty(p)
        H, L = _kernel._evaluate(self.A, self.AF, self.b, self.k, self.const, self.fro2, self.floor,
                                 self.lam, self.alpha, self.w, x, np.empty(m), np.empty(m), g)
        return H, L, g

    def objective(self, x):
        return self.evaluate(x)[0]

    def residual(self, x):
        H, L, g = self.evaluate(x)
        if not np.isfinite(H):
            return np.inf, np.inf
        res = _kernel._prox_residual(self.lam, self.alpha, self.w, x, g, L, np.empty_like(x))
        return res, res * L / (self.k * self.A.shape[0])


def objective(problem: GammaGlmProblem, x) -> float:
    """Negative log-likelihood plus elastic-net penalty; ``inf`` on overflow."""
    return _Kernel(problem).objective(np.asarray(x, dtype=np.float64))


def fixed_point_residual(problem: GammaGlmProblem, x) -> float:
    """``||x - prox_{R/L}(x - grad/L)||_inf`` with ``L`` the curvature bound at ``x``."""
    return _Kernel(problem).residual(np.asarray(x, dtype=np.float64))[0]


def gradient_mapping(problem: GammaGlmProblem, x) -> float:
    """The fixed-point residual times ``L / (k * m)``; the solver's stopping quantity."""
    return _Kernel(problem).residual(np.asarray(x, dtype=np.float64))[1]


def solve(problem: GammaGlmProblem, config: SolverConfig | None = None, warm_start=None) -> FitResult:
    """Minimize the penalized Gamma negative log-likelihood with FISTA.

    Each iteration takes a proximal gradient step from the momentum point
    with step ``1 / L``, ``L`` being the local curvature bound there. If the
    objective does not decrease, the momentum is reset to the last iterate
    and ``L`` is grown by ``1 / line_search_backtrack`` until it does; every
    growth counts as one line-search activation.

    Parameters
    ----------
    problem : GammaGlmProblem
    config : SolverConfig, optional
    warm_start : array-like, optional
        Starting coefficients; the zero vector by default.

    Returns
    -------
    FitResult

    Raises
    ------
    InputError
        If the objective is not finite at the starting point.
    SolverError
        If no decreasing step is found within ``line_search_max`` activations.
    """
    cfg = config or SolverConfig()
    p = problem.data.n_features
    if warm_start is None:
        x0 = np.zeros(p)
    else:
        x0 = np.array(warm_start, dtype=np.float64)
        if x0.shape != (p,) or not np.all(np.isfinite(x0)):
            raise InputError(f"warm_start must be a finite vector of length {p}")
    ker = _Kernel(problem)
    x, trace, s_trace, it, converged, acts, res, gmap, status = _kernel.fista(
        ker.A, ker.AF, ker.b, ker.k, ker.const, ker.fro2, ker.floor, ker.lam, ker.alpha, ker.w, x0,
        float(cfg.tol), int(cfg.max_iter), 1.0 / cfg.line_search_backtrack,
        int(cfg.line_search_max), float(cfg.descent_tol),
    )
    if status == _kernel.BAD_START:
        raise InputError("objective is not finite at the starting point")
    if status == _kernel.LINE_SEARCH_FAILED:
        raise SolverError(
            f"safeguard line search failed after {cfg.line_search_max} step reductions at "
            f"iteration {it} (scaled gradient mapping {gmap:.3e}); the iterate may already be "
            "stationary",
            residual=gmap,
        )
    return FitResult(
        coefficients=x,
        objective_trace=trace.tolist(),
        iterations=int(it),
        converged=bool(converged),
        line_search_activations=int(acts),
        residual=float(res),
        gradient_mapping=float(gmap),
        momentum_trace=s_trace.tolist(),
    )
