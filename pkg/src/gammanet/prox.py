"""Elastic-net penalty and its closed-form proximity operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import InputError

__all__ = ["EnPenalty", "penalty", "prox"]


@dataclass(frozen=True)
class EnPenalty:
    """``lam * (alpha * ||x||_1 + (1 - alpha) / 2 * ||x||_2^2)``.

    ``weights`` optionally scales the penalty per coordinate; a zero weight
    leaves that coordinate unpenalized.
    """

    lam: float
    alpha: float = 1.0
    weights: np.ndarray | None = None

    def __post_init__(self):
        if not (np.isfinite(self.lam) and self.lam >= 0):
            raise InputError(f"lambda must be >= 0, got {self.lam!r}")
        if not (0.0 <= self.alpha <= 1.0):
            raise InputError(f"alpha must lie in [0, 1], got {self.alpha!r}")


def penalty(pen: EnPenalty, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    w = 1.0 if pen.weights is None else pen.weights
    l1 = float(np.sum(w * np.abs(x)))
    l2 = float(np.sum(w * x * x))
    return pen.lam * (pen.alpha * l1 + 0.5 * (1.0 - pen.alpha) * l2)


def prox(pen: EnPenalty, step: float, v) -> np.ndarray:
    """Proximity operator of ``step * penalty`` evaluated at ``v``.

    Soft-thresholds each entry at ``step * lam * alpha`` and then shrinks it
    by ``1 / (1 + step * lam * (1 - alpha))``. Entries at or below the
    threshold come out as exact zeros.
    """
    if not step > 0:
        raise InputError(f"prox step must be positive, got {step!r}")
    v = np.asarray(v, dtype=np.float64)
    thresh = step * (pen.lam * pen.alpha)
    shrink = step * (pen.lam * (1.0 - pen.alpha))
    if pen.weights is not None:
        thresh = thresh * pen.weights
        shrink = shrink * pen.weights
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0) / (1.0 + shrink)
