"""CPT utility of a portfolio over an empirical return distribution.

Portfolio returns ``R @ w`` are split into gains (``>= 0``) and losses
(``< 0``). Each side receives rank-dependent decision weights derived from a
probability weighting function, and the utility is the difference of two
weighted ordered sums ("dot-sorts").
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class CptParams:
    """Exponential PT utility curvature and probability weighting exponents."""

    gamma_pos: float
    gamma_neg: float
    delta_pos: float
    delta_neg: float

    def __post_init__(self):
        for name in ("gamma_pos", "gamma_neg", "delta_pos", "delta_neg"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value <= 0:
                raise ValueError(f"{name} must be a positive finite number, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def loss_averse(self) -> bool:
        return self.gamma_neg > self.gamma_pos

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.gamma_pos, self.gamma_neg, self.delta_pos, self.delta_neg)

    @classmethod
    def parse(cls, text: str) -> "CptParams":
        """Parse ``"g+,g-,d+,d-"``."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected 4 comma-separated values, got {text!r}")
        return cls(*(float(p) for p in parts))


DEFAULT_PARAMS = CptParams(gamma_pos=8.4, gamma_neg=11.4, delta_pos=0.77, delta_neg=0.79)


@dataclass(frozen=True)
class ReturnsMatrix:
    """N x n simple returns (rows are periods, columns assets)."""

    values: np.ndarray
    asset_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise ValueError(f"returns must be a non-empty 2-D array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("returns contain non-finite entries")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        names = tuple(self.asset_names) or tuple(f"asset{i}" for i in range(values.shape[1]))
        if len(names) != values.shape[1]:
            raise ValueError(f"{len(names)} asset names for {values.shape[1]} columns")
        object.__setattr__(self, "asset_names", names)

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_assets(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def as_returns(R) -> np.ndarray:
    if isinstance(R, ReturnsMatrix):
        return R.values
    R = np.asarray(R, dtype=float)
    if R.ndim != 2:
        raise ValueError(f"returns must be 2-D, got shape {R.shape}")
    return R


def _check_dims(w, R):
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.shape[0] != R.shape[1]:
        raise ValueError(f"weights of shape {w.shape} do not match {R.shape[1]} assets")
    return w


# ----------------------------------------------------------------------------
# PT utility and probability weighting
# ----------------------------------------------------------------------------

def u_pos(x, params: CptParams):
    return -np.expm1(-params.gamma_pos * np.asarray(x, dtype=float))


def u_neg(x, params: CptParams):
    return np.expm1(params.gamma_neg * np.asarray(x, dtype=float))


def pt_value(x, params: CptParams):
    """S-shaped exponential PT utility, concave for gains and convex for losses."""
    x = np.asarray(x, dtype=float)
    # clamp the inactive branch so neither overflows
    out = np.where(x >= 0, u_pos(np.maximum(x, 0.0), params), u_neg(np.minimum(x, 0.0), params))
    return out[()] if out.ndim == 0 else out


def pt_derivative(x, params: CptParams):
    """One-sided derivative of :func:`pt_value`; the right derivative at 0."""
    x = np.asarray(x, dtype=float)
    out = np.where(
        x >= 0,
        params.gamma_pos * np.exp(-params.gamma_pos * np.maximum(x, 0.0)),
        params.gamma_neg * np.exp(params.gamma_neg * np.minimum(x, 0.0)),
    )
    return out[()] if out.ndim == 0 else out


def weight_fn(p, delta: float):
    """Probability weighting ``p^d / (p^d + (1-p)^d)^(1/d)``, exact at 0 and 1."""
    p = np.asarray(p, dtype=float)
    if np.any(~((p >= 0) & (p <= 1))):
        raise ValueError("probabilities must lie in [0, 1]")
    inner = np.clip(p, np.finfo(float).tiny, 1.0)
    num = inner**delta
    den = (num + (1.0 - inner) ** delta) ** (1.0 / delta)
    out = np.where(p == 0, 0.0, np.where(p == 1, 1.0, num / np.where(den > 0, den, 1.0)))
    return out[()] if out.ndim == 0 else out


# ----------------------------------------------------------------------------
# Decision weights
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class DecisionWeights:
    pi_pos: np.ndarray
    pi_neg: np.ndarray
    n_pos: int
    n_neg: int

    @property
    def tail_pos(self) -> np.ndarray:
        return self.pi_pos[self.n_neg:]

    @property
    def tail_neg(self) -> np.ndarray:
        return self.pi_neg[self.n_pos:]


def raw_decision_weights(count: int, n_total: int, delta: float) -> np.ndarray:
    """Unrepaired weights for one side; entry ``j`` belongs to the ``j``-th least extreme outcome."""
    if count == 0:
        return np.zeros(0)
    # w((count - j + 1)/N) - w((count - j)/N) for j = 1..count; the last is w(1/N) - w(0)
    levels = weight_fn(np.arange(count, -1, -1) / n_total, delta)
    return levels[:-1] - levels[1:]


def repair_monotonicity(raw: np.ndarray) -> np.ndarray:
    """Flatten everything before the (first) argmin to the minimum value."""
    out = raw.copy()
    if out.size:
        k = int(np.argmin(out))
        out[:k] = out[k]
        # no-op whenever the tail after the argmin is already nondecreasing,
        # which holds for inverse-S weighting functions
        out = np.maximum.accumulate(out)
    return out


def decision_weights(n_pos: int, n_neg: int, params: CptParams) -> DecisionWeights:
    n_pos, n_neg = int(n_pos), int(n_neg)
    if n_pos < 0 or n_neg < 0 or n_pos + n_neg < 1:
        raise ValueError(f"invalid gain/loss counts ({n_pos}, {n_neg})")
    n = n_pos + n_neg
    tail_pos = repair_monotonicity(raw_decision_weights(n_pos, n, params.delta_pos))
    tail_neg = repair_monotonicity(raw_decision_weights(n_neg, n, params.delta_neg))
    pi_pos = np.concatenate([np.zeros(n_neg), tail_pos])
    pi_neg = np.concatenate([np.zeros(n_pos), tail_neg])
    return DecisionWeights(pi_pos=pi_pos, pi_neg=pi_neg, n_pos=n_pos, n_neg=n_neg)


@lru_cache(maxsize=4096)
def _sorted_layout(n_neg: int, n_total: int, params: CptParams) -> np.ndarray:
    dw = decision_weights(n_total - n_neg, n_neg, params)
    out = np.concatenate([dw.tail_neg[::-1], dw.tail_pos])
    out.setflags(write=False)
    return out


def sorted_weights(n_neg: int, n_total: int, params: CptParams) -> np.ndarray:
    """Decision weights aligned with ascending portfolio returns.

    The loss block comes first (reversed loss tail, so the largest loss gets
    the most extreme loss weight), followed by the gain tail.
    """
    return _sorted_layout(int(n_neg), int(n_total), params)


def sorted_weights_batch(n_neg: np.ndarray, n_total: int, params: CptParams) -> np.ndarray:
    """Stack of :func:`sorted_weights` rows, one per entry of ``n_neg``."""
    uniq, inverse = np.unique(np.asarray(n_neg, dtype=int), return_inverse=True)
    rows = np.stack([sorted_weights(k, n_total, params) for k in uniq])
    return rows[inverse.ravel()]


# ----------------------------------------------------------------------------
# Sorting and dot-sort
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SortContext:
    order: np.ndarray
    sorted_returns: np.ndarray

    @property
    def row_map(self) -> np.ndarray:
        return self.order

    @property
    def n_neg(self) -> int:
        return int(np.searchsorted(self.sorted_returns, 0.0, side="left"))


def sort_returns(w, R) -> SortContext:
    R = as_returns(R)
    w = _check_dims(w, R)
    r = R @ w
    order = np.argsort(r, kind="stable")
    return SortContext(order=order, sorted_returns=r[order])


def dot_sort(pi, x) -> float:
    """Weighted ordered sum ``sum_i pi_i x_(i)`` with ``x`` sorted ascending."""
    pi = np.asarray(pi, dtype=float)
    x = np.asarray(x, dtype=float)
    if pi.shape != x.shape or pi.ndim != 1:
        raise ValueError(f"length mismatch: {pi.shape} vs {x.shape}")
    return float(pi @ np.sort(x, kind="stable"))


# ----------------------------------------------------------------------------
# CPT utility and supergradient
# ----------------------------------------------------------------------------

def phi_pos(x):
    return np.maximum(x, 0.0)


def phi_neg(x):
    return -np.minimum(x, 0.0)


def weights_at(w, R, params: CptParams) -> DecisionWeights:
    """Decision weights induced by the portfolio ``w``."""
    R = as_returns(R)
    r = R @ _check_dims(w, R)
    n_neg = int(np.count_nonzero(r < 0))
    return decision_weights(r.size - n_neg, n_neg, params)


def fixed_weights_utility(w, R, params: CptParams, dw: DecisionWeights) -> float:
    """CPT utility with decision weights frozen at ``dw`` (returns are re-sorted at ``w``)."""
    R = as_returns(R)
    r = R @ _check_dims(w, R)
    gains = dot_sort(dw.pi_pos, phi_pos(u_pos(r, params)))
    losses = dot_sort(dw.pi_neg, phi_neg(u_neg(r, params)))
    return gains - losses


def cpt_utility(w, R, params: CptParams) -> float:
    """Total CPT utility ``f_pi+(phi+(u+(Rw))) - f_pi-(phi-(u-(Rw)))``."""
    R = as_returns(R)
    return fixed_weights_utility(w, R, params, weights_at(w, R, params))


def cpt_utility_batch(W, R, params: CptParams) -> np.ndarray:
    """CPT utility of each row of ``W`` using the sorted-layout weights."""
    R = as_returns(R)
    W = np.atleast_2d(np.asarray(W, dtype=float))
    r = np.sort(W @ R.T, axis=1)
    n_neg = np.count_nonzero(r < 0, axis=1)
    kappa = sorted_weights_batch(n_neg, R.shape[0], params)
    return np.einsum("bi,bi->b", kappa, pt_value(r, params))


def cpt_supergradient_batch(W, R, params: CptParams) -> tuple[np.ndarray, np.ndarray]:
    """Utilities and supergradients for each row of ``W``.

    Decision weights are treated as locally constant and ties are broken by
    row index, which yields a valid element of the generalized gradient.
    """
    R = as_returns(R)
    W = np.atleast_2d(np.asarray(W, dtype=float))
    r = W @ R.T
    order = np.argsort(r, axis=1, kind="stable")
    rs = np.take_along_axis(r, order, axis=1)
    n_neg = np.count_nonzero(rs < 0, axis=1)
    kappa = sorted_weights_batch(n_neg, R.shape[0], params)
    # value and derivative share the two exponentials
    gain = rs >= 0
    e_pos = np.expm1(-params.gamma_pos * np.maximum(rs, 0.0))
    e_neg = np.expm1(params.gamma_neg * np.minimum(rs, 0.0))
    value = np.where(gain, -e_pos, e_neg)
    slope = np.where(gain, params.gamma_pos * (1.0 + e_pos), params.gamma_neg * (1.0 + e_neg))
    util = np.einsum("bi,bi->b", kappa, value)
    coef = np.empty_like(rs)
    np.put_along_axis(coef, order, kappa * slope, axis=1)
    return util, coef @ R


def cpt_supergradient(w, R, params: CptParams) -> np.ndarray:
    R = as_returns(R)
    w = _check_dims(w, R)
    return cpt_supergradient_batch(w[None, :], R, params)[1][0]
