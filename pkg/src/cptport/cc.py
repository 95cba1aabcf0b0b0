"""Iterated convex-concave procedure for CPT utility.

Decision weights are frozen at the current iterate, which turns the utility
into a weighted sum of PT utilities of the (sorted) sample returns. The PT
utility is split into a concave part plus a convex part, the convex part is
replaced by its supporting line at the current returns, and the resulting
concave surrogate is maximized inside an infinity-norm trust region.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .ascent import maximize_concave
from .constraints import ConstraintSet, is_feasible, project
from .core import CptParams, as_returns, cpt_utility, pt_value, sort_returns, sorted_weights
from .report import SolveReport, StartRecord, dataset_fingerprint


class ConfigurationError(ValueError):
    pass


def _require_loss_aversion(params: CptParams):
    if not params.loss_averse:
        raise ConfigurationError(
            "convex-concave solver needs gamma_neg > gamma_pos for the concave split "
            f"(got gamma_pos={params.gamma_pos}, gamma_neg={params.gamma_neg})"
        )


def f_ccv(x, params: CptParams):
    """Concave part: ``1 - exp(-g+ x)`` for gains, ``g- x`` for losses."""
    _require_loss_aversion(params)
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 0, -np.expm1(-params.gamma_pos * np.maximum(x, 0.0)), params.gamma_neg * x)
    return out[()] if out.ndim == 0 else out


def f_cvx(x, params: CptParams):
    """Convex remainder ``inf_{z <= min(x, 0)} exp(g- z) - 1 - g- z``.

    The inner function decreases on ``z < 0``, so the infimum sits at
    ``z = min(x, 0)``.
    """
    z = np.minimum(np.asarray(x, dtype=float), 0.0)
    out = np.expm1(params.gamma_neg * z) - params.gamma_neg * z
    return out[()] if out.ndim == 0 else out


def f_cvx_derivative(x, params: CptParams):
    x = np.asarray(x, dtype=float)
    out = np.where(x < 0, params.gamma_neg * np.expm1(params.gamma_neg * np.minimum(x, 0.0)), 0.0)
    return out[()] if out.ndim == 0 else out


def linearize_f_cvx(x_hat, params: CptParams):
    """Supporting line of :func:`f_cvx` at ``x_hat`` as ``(slope, intercept)``.

    At the kink ``x_hat = 0`` the flat subgradient is used.
    """
    slope = f_cvx_derivative(x_hat, params)
    intercept = f_cvx(x_hat, params) - slope * np.asarray(x_hat, dtype=float)
    return slope, intercept


@dataclass
class CcSurrogate:
    pi: np.ndarray
    rows: np.ndarray
    lin_slopes: np.ndarray
    lin_intercepts: np.ndarray
    anchor: np.ndarray
    trust_radius: float
    params: CptParams

    def value(self, w) -> float:
        x = self.rows @ np.asarray(w, dtype=float)
        return float(self.pi @ (f_ccv(x, self.params) + self.lin_slopes * x + self.lin_intercepts))

    def value_and_supergradient(self, w) -> tuple[float, np.ndarray]:
        p = self.params
        x = self.rows @ np.asarray(w, dtype=float)
        vals = f_ccv(x, p) + self.lin_slopes * x + self.lin_intercepts
        dccv = np.where(x >= 0, p.gamma_pos * np.exp(-p.gamma_pos * np.maximum(x, 0.0)), p.gamma_neg)
        return float(self.pi @ vals), (self.pi * (dccv + self.lin_slopes)) @ self.rows

    def fixed_weights_value(self, w) -> float:
        """``sum_i pi_i * pt_value(w' rho_i)`` with rows frozen in the anchor's order."""
        x = self.rows @ np.asarray(w, dtype=float)
        return float(self.pi @ pt_value(x, self.params))


def build_surrogate(w_hat, R, params: CptParams, trust_radius: float = np.inf) -> CcSurrogate:
    _require_loss_aversion(params)
    R = as_returns(R)
    w_hat = np.asarray(w_hat, dtype=float)
    ctx = sort_returns(w_hat, R)
    pi = sorted_weights(ctx.n_neg, R.shape[0], params)
    slopes, intercepts = linearize_f_cvx(ctx.sorted_returns, params)
    return CcSurrogate(
        pi=np.array(pi), rows=R[ctx.order], lin_slopes=slopes, lin_intercepts=intercepts,
        anchor=w_hat.copy(), trust_radius=float(trust_radius), params=params,
    )


@dataclass
class CcOptions:
    max_outer: int = 200
    tol: float = 1e-7
    trust_radius: float = 0.1
    max_radius: float = 1.0
    min_radius: float = 1e-6
    inner_tol: float = 1e-9
    inner_max_iter: int = 5000
    inner_window: int = 100
    inner_step: float = 0.1


def cc_step(w_hat, R, params: CptParams, C: ConstraintSet, trust_radius: float,
            opts: CcOptions | None = None) -> tuple[np.ndarray, CcSurrogate]:
    """Maximize the concave surrogate at ``w_hat`` over ``C`` within the trust region."""
    opts = opts or CcOptions()
    s = build_surrogate(w_hat, R, params, trust_radius)
    region = C.with_trust_region(s.anchor, trust_radius) if np.isfinite(trust_radius) else C
    res = maximize_concave(s.value_and_supergradient, s.anchor, region, tol=opts.inner_tol,
                           max_iter=opts.inner_max_iter, window=opts.inner_window,
                           step_scale=opts.inner_step * min(1.0, trust_radius))
    return res.x, s


def cc_optimize(w0, R, params: CptParams, C: ConstraintSet | None = None,
                opts: CcOptions | None = None) -> SolveReport:
    _require_loss_aversion(params)
    R = as_returns(R)
    C = C or ConstraintSet.long_only(R.shape[1])
    opts = opts or CcOptions()
    t0 = time.perf_counter()
    start = np.asarray(w0, dtype=float)
    w_hat = start if is_feasible(start, C, 1e-12) else project(start, C)
    u_hat = cpt_utility(w_hat, R, params)

    trace = [u_hat]
    radius_trace = []
    accepted = 0
    radius = opts.trust_radius
    reason = "max_outer"
    it = 0
    for it in range(1, opts.max_outer + 1):
        radius_trace.append(radius)
        w_next, _ = cc_step(w_hat, R, params, C, radius, opts)
        if float(np.max(np.abs(w_next - w_hat))) <= opts.tol:
            reason = "converged"
            break
        u_next = cpt_utility(w_next, R, params)
        if u_next > u_hat:
            w_hat, u_hat = w_next, u_next
            accepted += 1
            radius = min(2 * radius, opts.max_radius)
        else:
            radius /= 2
            if radius < opts.min_radius:
                reason = "trust region collapsed"
                break
        trace.append(u_hat)

    record = StartRecord(
        start=start, weights=w_hat, utility=u_hat, iterations=it, utility_trace=trace,
        termination=reason, extra={"trust_radius_trace": radius_trace, "accepted_steps": accepted},
    )
    return SolveReport(
        method="cc", records=[record], timings={"solve": time.perf_counter() - t0},
        config={"max_outer": opts.max_outer, "tol": opts.tol, "trust_radius": opts.trust_radius},
        dataset=dataset_fingerprint(R),
    )
