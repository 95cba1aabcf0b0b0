"""Projected supergradient ascent for concave surrogates over a ConstraintSet."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .constraints import ConstraintSet, project


@dataclass
class AscentResult:
    x: np.ndarray
    value: float
    start_value: float
    iterations: int
    reason: str


def maximize_concave(
    fun: Callable[[np.ndarray], tuple[float, np.ndarray]],
    x0,
    C: ConstraintSet,
    tol: float = 1e-9,
    max_iter: int = 5000,
    window: int = 100,
    step_scale: float = 1.0,
) -> AscentResult:
    """Projected supergradient ascent with a ``c / sqrt(k)`` step.

    ``fun`` returns ``(value, supergradient)``. ``c`` is ``step_scale`` over
    the norm of the initial supergradient. The best iterate is remembered; a
    candidate only replaces it when it improves the value by more than
    ``tol``, and the run stops after ``window`` iterations without such an
    improvement.
    """
    x = project(np.asarray(x0, dtype=float), C)
    value, grad = fun(x)
    if not np.isfinite(value) or not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite surrogate value or supergradient at the start point")
    start_value = value
    best_x, best_value = x.copy(), value
    gnorm = float(np.linalg.norm(grad))
    if gnorm == 0.0:
        return AscentResult(best_x, best_value, start_value, 0, "zero supergradient")
    c = step_scale / (gnorm + 1e-12)
    last_improvement = 0
    reason = "max_iter"
    k = 0
    for k in range(1, max_iter + 1):
        g_norm = float(np.linalg.norm(grad))
        if g_norm == 0.0:
            reason = "zero supergradient"
            break
        x = project(x + (c / np.sqrt(k)) * grad, C)
        value, grad = fun(x)
        if not np.isfinite(value):
            raise FloatingPointError("non-finite surrogate value during ascent")
        if value > best_value + tol:
            best_x, best_value = x.copy(), value
            last_improvement = k
        elif value > best_value:
            # small gains are kept but do not reset the stall counter
            best_x, best_value = x.copy(), value
        if k - last_improvement >= window:
            reason = "stalled"
            break
    return AscentResult(best_x, best_value, start_value, k, reason)
