"""Gamma GLM with log link: data containers, likelihood, gradient, curvature.

The mean of example ``i`` is ``exp(A[i] @ x)`` and every example shares the
Gamma shape ``k``; the per-example scale ``exp(A[i] @ x) / k`` is derived on
the fly and never stored.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _kernel
from .exceptions import InputError, NumericalError

__all__ = [
    "Dataset",
    "GammaGlmProblem",
    "nll",
    "nll_gradient",
    "local_curvature_bound",
    "curvature_floor",
    "lambda_max",
]

# Exponent clamp used only when reporting an overflow diagnostic.
_DIAG_CLAMP = 700.0


def _readonly(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix ``design`` (m x p) and positive responses (length m)."""

    design: np.ndarray
    responses: np.ndarray

    def __post_init__(self):
        A = _readonly(self.design)
        b = _readonly(self.responses)
        if A.ndim == 1:
            A = _readonly(A.reshape(-1, 1))
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise InputError(f"design must be a non-empty 2-D array, got shape {A.shape}")
        if b.ndim != 1 or b.shape[0] != A.shape[0]:
            raise InputError(
                f"responses must be a vector of length {A.shape[0]}, got shape {b.shape}"
            )
        if not np.all(np.isfinite(A)):
            i, j = np.argwhere(~np.isfinite(A))[0]
            raise InputError(f"design has a non-finite entry at row {i}, column {j}")
        bad = ~(np.isfinite(b) & (b > 0))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise InputError(f"response at row {i} is {b[i]!r}; Gamma responses must be > 0")
        object.__setattr__(self, "design", A)
        object.__setattr__(self, "responses", b)

    @property
    def n_samples(self) -> int:
        return self.design.shape[0]

    @property
    def n_features(self) -> int:
        return self.design.shape[1]

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows)
        return Dataset(self.design[rows], self.responses[rows])

    def columns(self, cols) -> "Dataset":
        cols = np.asarray(cols)
        return Dataset(self.design[:, cols], self.responses)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.design, other.design) and np.array_equal(
            self.responses, other.responses
        )

    __hash__ = None


@dataclass(frozen=True)
class GammaGlmProblem:
    """A dataset together with the Gamma shape and elastic-net settings.

    Parameters
    ----------
    data : Dataset
    shape : float
        Gamma shape ``k`` shared by all examples; a fixed hyperparameter.
    lam : float
        Regularization strength (>= 0).
    alpha : float
        Elastic-net mixing in [0, 1]; 1 is the lasso, 0 is ridge.
    unpenalized : tuple of int
        Column indices excluded from the penalty (e.g. an intercept column).
    """

    data: Dataset
    shape: float = 1.0
    lam: float = 0.0
    alpha: float = 1.0
    unpenalized: tuple = field(default=())

    def __post_init__(self):
        if not (np.isfinite(self.shape) and self.shape > 0):
            raise InputError(f"shape must be a positive number, got {self.shape!r}")
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise InputError(f"lambda must be >= 0, got {self.lam!r}")
        if not (0.0 <= self.alpha <= 1.0):
            raise InputError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        p = self.data.n_features
        unpen = tuple(sorted({int(j) for j in self.unpenalized}))
        if any(j < 0 or j >= p for j in unpen):
            raise InputError(f"unpenalized column index out of range for p={p}: {unpen}")
        object.__setattr__(self, "shape", float(self.shape))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "unpenalized", unpen)

    def with_lambda(self, lam) -> "GammaGlmProblem":
        return GammaGlmProblem(self.data, self.shape, lam, self.alpha, self.unpenalized)

    def penalty_weights(self):
        """Per-column penalty factor: 0 on unpenalized columns, 1 elsewhere."""
        if not self.unpenalized:
            return None
        w = np.ones(self.data.n_features)
        w[list(self.unpenalized)] = 0.0
        return w


def nll_constant(data: Dataset, shape: float) -> float:
    """The x-independent part of the negative log-likelihood."""
    k = float(shape)
    m = data.n_samples
    return m * (gammaln(k) - k * np.log(k)) - (k - 1.0) * float(np.sum(np.log(data.responses)))


def _check_x(data, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (data.n_features,):
        raise InputError(f"coefficient vector must have length {data.n_features}, got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InputError("coefficient vector has non-finite entries")
    return x


def _scaled_residuals(data, x):
    """Return ``(eta, b * exp(-eta))``, raising a row-level diagnostic on overflow."""
    eta = data.design @ x
    with np.errstate(over="ignore", invalid="ignore"):
        ratio = data.responses * np.exp(-eta)
    if not np.all(np.isfinite(ratio)):
        i = int(np.flatnonzero(~np.isfinite(ratio))[0])
        clamped = np.clip(eta[i], -_DIAG_CLAMP, _DIAG_CLAMP)
        raise NumericalError(
            f"b*exp(-A x) overflows at row {i}: linear predictor A[{i}] @ x = {eta[i]:.6g} "
            f"(exp(-{clamped:.6g}) = {np.exp(-clamped):.3g}, clamped at +/-{_DIAG_CLAMP:g})",
            row=i,
        )
    return eta, ratio


def nll(problem: GammaGlmProblem, x) -> float:
    """Negative log-likelihood of the Gamma GLM, constants included.

    Raises
    ------
    NumericalError
        If ``b_i * exp(-A_i x)`` overflows; the message names the row.
    """
    data = problem.data
    x = _check_x(data, x)
    k = problem.shape
    eta, ratio = _scaled_residuals(data, x)
    value = nll_constant(data, k) + k * float(np.sum(eta + ratio))
    if not np.isfinite(value):
        raise NumericalError("negative log-likelihood is not finite")
    return value


def nll_gradient(problem: GammaGlmProblem, x) -> np.ndarray:
    """Analytic gradient ``k * A.T @ (1 - b * exp(-A x))``."""
    data = problem.data
    x = _check_x(data, x)
    _, ratio = _scaled_residuals(data, x)
    return problem.shape * (data.design.T @ (1.0 - ratio))


def curvature_floor(data: Dataset) -> float:
    """Lower bound applied to the local curvature estimate."""
    return 1e-6 * (1.0 + float(np.sum(data.design**2)))


def local_curvature_bound(problem: GammaGlmProblem, x) -> float:
    """Local quadratic bound ``||A||_F^2 * sum_i k^2 (1 - b_i exp(-A_i x))^2``.

    The raw bound vanishes at a perfect fit, so it is floored by
    :func:`curvature_floor` to keep the step size finite.
    """
    data = problem.data
    x = _check_x(data, x)
    _, ratio = _scaled_residuals(data, x)
    k = problem.shape
    fro2 = float(np.sum(data.design**2))
    raw = fro2 * k * k * float(np.sum((1.0 - ratio) ** 2))
    return max(raw, curvature_floor(data))


def lambda_max(data: Dataset, shape: float = 1.0, alpha: float = 1.0) -> float:
    """Smallest penalty strength at which the zero vector is optimal.

    Returns ``max_j |sum_i k (1 - b_i) A_ij| / alpha``, nudged upward by a few
    ulps if needed so that ``lambda_max * alpha`` dominates every gradient
    entry in floating point (the solver then returns exact zeros).
    """
    if not (0.0 < alpha <= 1.0):
        raise InputError(
            f"lambda_max needs alpha in (0, 1], got {alpha!r}; "
            "a pure ridge penalty never forces all coefficients to zero"
        )
    g = np.abs(_kernel.gradient(data.design, data.responses, float(shape), np.zeros(data.n_features)))
    gmax = float(g.max())
    lam = gmax / alpha
    while lam * alpha < gmax:
        lam = np.nextafter(lam, np.inf)
    return float(lam)
