"""Mean-variance frontier and the MV heuristic for CPT maximization."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .constraints import ConstraintSet, project
from .core import CptParams, as_returns, cpt_utility_batch

GAMMA_MIN_VARIANCE = 1e6
GAMMA_MAX_RETURN = 1e-8
LOG10_GAMMA_RANGE = (-8.0, 6.0)


@dataclass(frozen=True)
class MomentEstimates:
    mu: np.ndarray
    sigma: np.ndarray


def estimate_moments(R) -> MomentEstimates:
    R = as_returns(R)
    if R.shape[0] < 2:
        raise ValueError("need at least two samples to estimate a covariance")
    mu = R.mean(axis=0)
    centered = R - mu
    sigma = centered.T @ centered / (R.shape[0] - 1)
    return MomentEstimates(mu=mu, sigma=0.5 * (sigma + sigma.T))


def mv_objective(w, gamma: float, m: MomentEstimates) -> float:
    w = np.asarray(w, dtype=float)
    return float(w @ m.mu - gamma * w @ m.sigma @ w)


def kkt_residual(w, gamma: float, m: MomentEstimates, C: ConstraintSet, tol: float = 1e-9) -> float:
    """Largest violation of the optimality conditions of ``max mu'w - gamma w'Sw`` over ``C``.

    The budget multiplier is taken as the median of ``-grad`` over free
    coordinates; bound multipliers must have the right sign.
    """
    w = np.asarray(w, dtype=float)
    grad = m.mu - 2 * gamma * m.sigma @ w
    at_lo = w <= C.lower + tol
    at_hi = w >= C.upper - tol
    free = ~(at_lo | at_hi)
    if free.any():
        nu = float(np.median(grad[free]))
    else:
        lo = np.max(grad[at_lo], initial=-np.inf)
        hi = np.min(grad[at_hi], initial=np.inf)
        nu = 0.5 * (lo + hi) if np.isfinite(lo) and np.isfinite(hi) else (lo if np.isfinite(lo) else hi)
    res = np.zeros_like(w)
    res[free] = np.abs(grad[free] - nu)
    res[at_lo & ~at_hi] = np.maximum(grad[at_lo & ~at_hi] - nu, 0.0)
    res[at_hi & ~at_lo] = np.maximum(nu - grad[at_hi & ~at_lo], 0.0)
    return float(max(res.max(initial=0.0), abs(w.sum() - C.budget)))


def _active_set_qp(Q, c, C: ConstraintSet, w0, max_iter: int = 500):
    """Minimize ``0.5 w'Qw - c'w`` over ``C`` (Q positive definite) by a primal active-set method."""
    n = C.n
    lower, upper = C.lower, C.upper
    w = project(w0, C)
    tol = 1e-12
    # working set: -1 at lower bound, +1 at upper bound, 0 free
    ws = np.where(np.isclose(w, lower, rtol=0, atol=tol), -1, 0)
    ws = np.where((ws == 0) & np.isclose(w, upper, rtol=0, atol=tol), 1, ws)
    w = np.where(ws == -1, lower, np.where(ws == 1, upper, w))
    for _ in range(max_iter):
        g = Q @ w - c
        F = np.flatnonzero(ws == 0)
        nu = None
        if F.size:
            k = F.size
            K = np.zeros((k + 1, k + 1))
            K[:k, :k] = Q[np.ix_(F, F)]
            K[:k, k] = 1.0
            K[k, :k] = 1.0
            rhs = np.concatenate([-g[F], [0.0]])
            sol = np.linalg.solve(K, rhs)
            p_F, nu = sol[:k], sol[k]
        else:
            p_F = np.zeros(0)
        scale = max(1.0, float(np.max(np.abs(w))))
        if F.size and np.max(np.abs(p_F)) > 1e-13 * scale:
            # step toward the face minimizer, stopping at the first blocking bound
            alpha, block, side = 1.0, -1, 0
            for j, pj in zip(F, p_F):
                if pj < 0 and np.isfinite(lower[j]):
                    a = (lower[j] - w[j]) / pj
                    if a < alpha:
                        alpha, block, side = a, j, -1
                elif pj > 0 and np.isfinite(upper[j]):
                    a = (upper[j] - w[j]) / pj
                    if a < alpha:
                        alpha, block, side = a, j, 1
            w[F] += max(alpha, 0.0) * p_F
            if block >= 0:
                ws[block] = side
                w[block] = lower[block] if side == -1 else upper[block]
            continue
        # stationary on the current face: check bound multipliers
        if nu is None:
            cand_lo = -g[ws == -1]
            cand_hi = -g[ws == 1]
            lo = np.max(cand_lo, initial=-np.inf)
            hi = np.min(cand_hi, initial=np.inf)
            nu = 0.5 * (lo + hi) if np.isfinite(lo) and np.isfinite(hi) else (lo if np.isfinite(lo) else hi)
        lam = g + nu  # multiplier of the active bound (>= 0 at lower, <= 0 at upper)
        viol = np.where(ws == -1, -lam, np.where(ws == 1, lam, 0.0))
        j = int(np.argmax(viol))
        if viol[j] <= 1e-14 * max(1.0, float(np.max(np.abs(g)))):
            return w
        ws[j] = 0
    return w


def solve_mv(gamma: float, m: MomentEstimates, C: ConstraintSet | None = None, w0=None) -> np.ndarray:
    """Maximizer of ``mu'w - gamma w'Sigma w`` over ``C``.

    Solved exactly with a primal active-set method; a ``1e-12`` ridge keeps the
    face systems nonsingular when ``Sigma`` is rank deficient or ``gamma`` tiny.
    """
    if not gamma > 0:
        raise ValueError(f"risk aversion must be positive, got {gamma}")
    n = m.mu.shape[0]
    C = C or ConstraintSet.long_only(n)
    Q = 2 * gamma * m.sigma + 1e-12 * np.eye(n)
    w0 = np.full(n, 1.0 / n) if w0 is None else np.asarray(w0, dtype=float)
    return _active_set_qp(Q, m.mu, C, w0)


def volatility(w, m: MomentEstimates) -> float:
    w = np.asarray(w, dtype=float)
    return float(np.sqrt(max(w @ m.sigma @ w, 0.0)))


@dataclass
class Frontier:
    weights: np.ndarray
    volatilities: np.ndarray
    means: np.ndarray
    gammas: np.ndarray
    degenerate: bool = False
    targets: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __len__(self):
        return self.weights.shape[0]

    def points(self):
        return [(self.weights[i], float(self.volatilities[i]), float(self.means[i])) for i in range(len(self))]


def frontier(m: MomentEstimates, C: ConstraintSet | None = None, K: int = 100,
             vol_tol: float = 1e-6, max_bisect: int = 60) -> Frontier:
    """``K`` frontier portfolios equally spaced in volatility between the endpoints.

    Each target volatility is hit by bisection on ``log10(gamma)``, using the
    already solved points to narrow the initial bracket. The bisection stops
    once the volatility error is below ``vol_tol`` times the target spacing
    (capped at ``vol_tol`` itself).
    """
    if K < 2:
        raise ValueError("need at least two frontier points")
    n = m.mu.shape[0]
    C = C or ConstraintSet.long_only(n)

    cache: dict[float, tuple[np.ndarray, float]] = {}

    def solve(log_gamma: float, warm=None):
        if log_gamma not in cache:
            w = solve_mv(10.0 ** log_gamma, m, C, warm)
            cache[log_gamma] = (w, volatility(w, m))
        return cache[log_gamma]

    lg_lo, lg_hi = LOG10_GAMMA_RANGE
    w_max, vol_max = solve(lg_lo)
    w_min, vol_min = solve(lg_hi)
    if vol_max - vol_min <= 1e-10:
        W = np.repeat(w_min[None, :], K, axis=0)
        return Frontier(W, np.full(K, vol_min), np.full(K, float(w_min @ m.mu)),
                        np.full(K, GAMMA_MIN_VARIANCE), degenerate=True,
                        targets=np.full(K, vol_min))

    targets = np.linspace(vol_min, vol_max, K)
    tol = vol_tol * min(1.0, (vol_max - vol_min) / (K - 1))
    weights, gammas = [w_min], [10.0 ** lg_hi]
    for target in targets[1:-1]:
        # volatility is nonincreasing in gamma: bracket from the cache
        known = sorted(cache.items())
        above = [lg for lg, (_, v) in known if v >= target]
        below = [lg for lg, (_, v) in known if v <= target]
        a = max(above) if above else lg_lo
        b = min([lg for lg in below if lg >= a], default=lg_hi)
        w_best, lg_best = None, None
        for _ in range(max_bisect):
            mid = 0.5 * (a + b)
            w, v = solve(mid, cache[a][0])
            w_best, lg_best = w, mid
            if abs(v - target) <= tol:
                break
            if v > target:
                a = mid
            else:
                b = mid
        weights.append(w_best)
        gammas.append(10.0 ** lg_best)
    weights.append(w_max)
    gammas.append(10.0 ** lg_lo)

    W = np.array(weights)
    vols = np.array([volatility(w, m) for w in W])
    order = np.argsort(vols, kind="stable")
    W, vols, gammas = W[order], vols[order], np.array(gammas)[order]
    return Frontier(W, vols, W @ m.mu, gammas, degenerate=False, targets=targets)


@dataclass
class MvHeuristicResult:
    weights: np.ndarray
    utility: float
    gamma: float
    frontier: Frontier
    utilities: np.ndarray


def mv_heuristic(R, params: CptParams, C: ConstraintSet | None = None, K: int = 100) -> MvHeuristicResult:
    """Best frontier portfolio by CPT utility."""
    R = as_returns(R)
    m = estimate_moments(R)
    fr = frontier(m, C, K)
    util = cpt_utility_batch(fr.weights, R, params)
    i = int(np.argmax(util))
    return MvHeuristicResult(fr.weights[i].copy(), float(util[i]), float(fr.gammas[i]), fr, util)
