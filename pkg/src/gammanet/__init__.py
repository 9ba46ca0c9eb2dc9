"""Elastic-net regularized Gamma GLMs fitted by FISTA with a local curvature bound."""

from .exceptions import GammaNetError, InputError, NumericalError, SolverError
from .model import (
    Dataset,
    GammaGlmProblem,
    lambda_max,
    local_curvature_bound,
    nll,
    nll_gradient,
)
from .path import (
    CvReport,
    PathConfig,
    build_grid,
    cross_validate,
    fold_partition,
    refit_on_support,
    select_lambda,
)
from .prox import EnPenalty, penalty, prox
from .simulation import METHODS, SimConfig, SimulationReport, run_study
from .solver import FitResult, SolverConfig, solve

__version__ = "0.1.0"

__all__ = [
    "GammaNetError", "InputError", "NumericalError", "SolverError",
    "Dataset", "GammaGlmProblem", "lambda_max", "local_curvature_bound", "nll", "nll_gradient",
    "CvReport", "PathConfig", "build_grid", "cross_validate", "fold_partition",
    "refit_on_support", "select_lambda",
    "EnPenalty", "penalty", "prox",
    "METHODS", "SimConfig", "SimulationReport", "run_study",
    "FitResult", "SolverConfig", "solve",
]
