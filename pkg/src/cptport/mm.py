"""Minorization-maximization for CPT utility.

At an anchor portfolio the convex dot-sort-positive term is replaced by its
supporting hyperplane, and the convex loss utility inside the second term by
its tangent. The result is a concave function of the weights that lies below
the fixed-weights CPT utility and touches it at the anchor.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .ascent import maximize_concave
from .constraints import ConstraintSet, is_feasible, project
from .core import (
    CptParams,
    DecisionWeights,
    as_returns,
    cpt_utility,
    dot_sort,
    fixed_weights_utility,
    phi_neg,
    phi_pos,
    u_neg,
    u_pos,
    weights_at,
)
from .report import SolveReport, StartRecord, dataset_fingerprint


@dataclass
class MinorantModel:
    g: np.ndarray
    affine_loss_slopes: np.ndarray
    affine_loss_intercepts: np.ndarray
    pi_neg: np.ndarray
    anchor: np.ndarray
    constant: float
    R: np.ndarray
    params: CptParams
    weights: DecisionWeights

    def linearized_loss_utility(self, w) -> np.ndarray:
        return self.affine_loss_intercepts + self.affine_loss_slopes * (self.R @ w)

    def value(self, w) -> float:
        w = np.asarray(w, dtype=float)
        gains = self.constant + self.g @ u_pos(self.R @ w, self.params)
        losses = dot_sort(self.pi_neg, phi_neg(self.linearized_loss_utility(w)))
        return float(gains - losses)

    def value_and_supergradient(self, w) -> tuple[float, np.ndarray]:
        w = np.asarray(w, dtype=float)
        r = self.R @ w
        gp = self.params.gamma_pos
        gain_term = self.g @ u_pos(r, self.params)
        y = self.affine_loss_intercepts + self.affine_loss_slopes * r
        z = phi_neg(y)
        order = np.argsort(z, kind="stable")
        pi_at = np.empty_like(z)
        pi_at[order] = self.pi_neg
        value = self.constant + gain_term - float(self.pi_neg @ z[order])
        coef = self.g * gp * np.exp(-gp * r) + self.affine_loss_slopes * np.where(y < 0, pi_at, 0.0)
        return float(value), coef @ self.R

    def fixed_weights_value(self, w) -> float:
        """The function this model minorizes: CPT utility with the anchor's decision weights."""
        return fixed_weights_utility(w, self.R, self.params, self.weights)


def build_minorant(w_hat, R, params: CptParams) -> MinorantModel:
    R = as_returns(R)
    w_hat = np.asarray(w_hat, dtype=float)
    if w_hat.shape != (R.shape[1],):
        raise ValueError(f"anchor of shape {w_hat.shape} does not match {R.shape[1]} assets")
    dw = weights_at(w_hat, R, params)
    r_hat = R @ w_hat

    # supporting hyperplane of dot-sort-positive at u+(R w_hat)
    x_hat = u_pos(r_hat, params)
    order = np.argsort(x_hat, kind="stable")
    g = np.empty_like(x_hat)
    g[order] = dw.pi_pos
    g = np.where(x_hat < 0, 0.0, g)
    constant = dot_sort(dw.pi_pos, phi_pos(x_hat)) - float(g @ x_hat)

    # tangent of the convex loss utility at each sample's return
    slopes = params.gamma_neg * np.exp(params.gamma_neg * r_hat)
    intercepts = u_neg(r_hat, params) - slopes * r_hat
    return MinorantModel(
        g=g,
        affine_loss_slopes=slopes,
        affine_loss_intercepts=intercepts,
        pi_neg=dw.pi_neg,
        anchor=w_hat.copy(),
        constant=float(constant),
        R=R,
        params=params,
        weights=dw,
    )


@dataclass
class MmOptions:
    max_outer: int = 100
    tol: float = 1e-7
    inner_tol: float = 1e-9
    inner_max_iter: int = 5000
    inner_window: int = 100
    inner_step: float = 0.1


def maximize_minorant(m: MinorantModel, C: ConstraintSet, tol: float = 1e-9, max_iter: int = 5000,
                      window: int = 100, step_scale: float = 0.1) -> np.ndarray:
    """Projected supergradient ascent on the concave minorant, started at its anchor."""
    res = maximize_concave(m.value_and_supergradient, m.anchor, C, tol=tol, max_iter=max_iter,
                           window=window, step_scale=step_scale)
    return res.x


def mm_optimize(w0, R, params: CptParams, C: ConstraintSet | None = None,
                opts: MmOptions | None = None) -> SolveReport:
    R = as_returns(R)
    C = C or ConstraintSet.long_only(R.shape[1])
    opts = opts or MmOptions()
    t0 = time.perf_counter()
    start = np.asarray(w0, dtype=float)
    w_hat = start if is_feasible(start, C, 1e-12) else project(start, C)

    trace = [cpt_utility(w_hat, R, params)]
    fixed_trace = []
    reason = "max_outer"
    it = 0
    for it in range(1, opts.max_outer + 1):
        m = build_minorant(w_hat, R, params)
        w_next = maximize_minorant(m, C, tol=opts.inner_tol, max_iter=opts.inner_max_iter,
                                   window=opts.inner_window, step_scale=opts.inner_step)
        fixed_trace.append(m.fixed_weights_value(w_next))
        step = float(np.max(np.abs(w_next - w_hat)))
        w_hat = w_next
        trace.append(cpt_utility(w_hat, R, params))
        if step <= opts.tol:
            reason = "converged"
            break

    record = StartRecord(
        start=start, weights=w_hat, utility=trace[-1], iterations=it, utility_trace=trace,
        termination=reason, extra={"fixed_weights_utility_trace": fixed_trace},
    )
    return SolveReport(
        method="mm", records=[record], timings={"solve": time.perf_counter() - t0},
        config={"max_outer": opts.max_outer, "tol": opts.tol, "inner_tol": opts.inner_tol,
                "inner_max_iter": opts.inner_max_iter},
        dataset=dataset_fingerprint(R),
    )
