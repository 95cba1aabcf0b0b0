"""Budget plus box constraints and Euclidean projection onto them."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConstraintSet:
    """``{w : sum(w) = budget, lower <= w <= upper}``; bounds may be infinite."""

    lower: np.ndarray
    upper: np.ndarray
    budget: float = 1.0

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float)
        upper = np.array(self.upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-D arrays of equal length")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise ValueError("bounds must not be NaN")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")
        if np.any(lower == np.inf) or np.any(upper == -np.inf):
            raise ValueError("bounds exclude every finite weight")
        if not (lower.sum() <= self.budget <= upper.sum()):
            raise ValueError(
                f"infeasible constraints: sum(lower)={lower.sum():g}, "
                f"sum(upper)={upper.sum():g}, budget={self.budget:g}"
            )
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def long_only(cls, n: int) -> "ConstraintSet":
        return cls(np.zeros(n), np.full(n, np.inf))

    @classmethod
    def box(cls, n: int, lower: float, upper: float) -> "ConstraintSet":
        return cls(np.full(n, float(lower)), np.full(n, float(upper)))

    @property
    def n(self) -> int:
        return self.lower.shape[0]

    @property
    def is_long_only(self) -> bool:
        return bool(np.all(self.lower == 0) and np.all(np.isinf(self.upper)))

    def with_trust_region(self, center, radius: float) -> "ConstraintSet":
        """Intersect with the infinity-norm ball of ``radius`` around ``center``."""
        center = np.asarray(center, dtype=float)
        return ConstraintSet(
            np.maximum(self.lower, center - radius),
            np.minimum(self.upper, center + radius),
            self.budget,
        )

    def effective_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        """Tightest per-asset bounds implied by the box and the budget."""
        n = self.n
        lo, hi = self.lower.copy(), self.upper.copy()
        for i in range(n):
            others = np.arange(n) != i
            hi[i] = min(hi[i], self.budget - self.lower[others].sum())
            lo[i] = max(lo[i], self.budget - self.upper[others].sum())
        return lo, hi


def project(v, C: ConstraintSet) -> np.ndarray:
    """Euclidean projection of ``v`` (or each row of a 2-D ``v``) onto ``C``.

    The projection is ``clip(v - lam, lower, upper)`` where ``lam`` is the
    multiplier of the budget constraint. ``sum(clip(v - lam))`` is piecewise
    linear and nonincreasing in ``lam`` with kinks at ``v - upper`` and
    ``v - lower``; bracketing the root between adjacent kinks fixes the active
    set, after which ``lam`` follows in closed form.
    """
    v = np.asarray(v, dtype=float)
    single = v.ndim == 1
    V = np.atleast_2d(v)
    if V.shape[1] != C.n:
        raise ValueError(f"vector of length {V.shape[1]} for {C.n} assets")
    lower, upper, b = C.lower, C.upper, C.budget
    if single:
        return _project_one(v, lower, upper, b)

    kinks = np.concatenate([V - upper, V - lower], axis=1)
    kinks = np.where(np.isfinite(kinks), kinks, np.nan)
    with np.errstate(invalid="ignore"):
        S = np.clip(V[:, None, :] - kinks[:, :, None], lower, upper).sum(axis=2)
        lam_lo = np.max(np.where(S >= b, kinks, -np.inf), axis=1)
        lam_hi = np.min(np.where(S <= b, kinks, np.inf), axis=1)
    lam_lo = np.where(np.isnan(lam_lo), -np.inf, lam_lo)
    lam_hi = np.where(np.isnan(lam_hi), np.inf, lam_hi)
    both = np.isfinite(lam_lo) & np.isfinite(lam_hi)
    with np.errstate(invalid="ignore"):
        mid = np.where(both, 0.5 * (lam_lo + lam_hi),
                       np.where(np.isfinite(lam_lo), lam_lo + 1.0,
                                np.where(np.isfinite(lam_hi), lam_hi - 1.0, 0.0)))

    shifted = V - mid[:, None]
    free = (shifted > lower) & (shifted < upper)
    nfree = free.sum(axis=1)
    fixed = np.where(free, 0.0, np.clip(shifted, lower, upper)).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        lam = np.where(nfree > 0, (np.where(free, V, 0.0).sum(axis=1) + fixed - b) / nfree, mid)
    W = np.clip(V - lam[:, None], lower, upper)
    return W[0] if single else W


def _project_one(v, lower, upper, b):
    # same kink search as the batched path, without per-row masking overhead
    kinks = np.concatenate((v - upper, v - lower))
    kinks = np.sort(kinks[np.isfinite(kinks)])
    S = np.minimum(np.maximum(v - kinks[:, None], lower), upper).sum(axis=1)
    i = int(np.searchsorted(-S, -b, side="right"))  # S is nonincreasing along kinks
    lo = kinks[i - 1] if i > 0 else -np.inf
    hi = kinks[i] if i < kinks.size else np.inf
    if np.isfinite(lo) and np.isfinite(hi):
        mid = 0.5 * (lo + hi)
    elif np.isfinite(lo):
        mid = lo + 1.0
    elif np.isfinite(hi):
        mid = hi - 1.0
    else:
        mid = 0.0
    shifted = v - mid
    free = (shifted > lower) & (shifted < upper)
    nfree = int(free.sum())
    if nfree:
        fixed = np.minimum(np.maximum(shifted[~free], lower[~free]), upper[~free]).sum()
        lam = (v[free].sum() + fixed - b) / nfree
    else:
        lam = mid
    return np.minimum(np.maximum(v - lam, lower), upper)


def is_feasible(w, C: ConstraintSet, tol: float = 1e-9) -> bool:
    w = np.asarray(w, dtype=float)
    if w.shape != (C.n,) or not np.all(np.isfinite(w)):
        return False
    return bool(
        abs(w.sum() - C.budget) <= tol
        and np.all(w >= C.lower - tol)
        and np.all(w <= C.upper + tol)
    )
