"""Projected gradient ascent on CPT utility, batched over many starting points."""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet, project
from .core import CptParams, as_returns, cpt_supergradient_batch
from .report import SolveReport, StartRecord, dataset_fingerprint


@dataclass
class GaOptions:
    steps: int = 2000
    eta0: float = 0.05
    normalize: bool = True
    threads: int = 1
    record_trace: bool = True


def step_size(k: int, opts: GaOptions) -> float:
    return opts.eta0 / (1.0 + k / (opts.steps / 2))


def _direction(grad, opts):
    if not opts.normalize:
        return grad
    norm = np.linalg.norm(grad, axis=1, keepdims=True)
    return grad / np.where(norm > 0, norm, 1.0)


def _run_block(W, R, params, C, opts):
    util, grad = cpt_supergradient_batch(W, R, params)
    best_w, best_u = W.copy(), util.copy()
    trace = [best_u.copy()] if opts.record_trace else []
    for k in range(opts.steps):
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("non-finite CPT supergradient during gradient ascent")
        W = project(W + step_size(k, opts) * _direction(grad, opts), C)
        util, grad = cpt_supergradient_batch(W, R, params)
        better = util > best_u
        best_u = np.where(better, util, best_u)
        best_w[better] = W[better]
        if opts.record_trace:
            trace.append(best_u.copy())
    return best_w, best_u, np.array(trace).reshape(len(trace), W.shape[0])


def _softmax(X):
    Z = np.exp(X - X.max(axis=1, keepdims=True))
    return Z / Z.sum(axis=1, keepdims=True)


def softmax_jacobian(w) -> np.ndarray:
    """``J_ij = w_i (delta_ij - w_j)`` for the multinomial logistic map."""
    w = np.asarray(w, dtype=float)
    return np.diag(w) - np.outer(w, w)


def _run_block_softmax(W, R, params, _C, opts):
    X = np.log(np.maximum(W, 1e-12))
    W = _softmax(X)
    util, grad = cpt_supergradient_batch(W, R, params)
    best_w, best_u = W.copy(), util.copy()
    trace = [best_u.copy()] if opts.record_trace else []
    for k in range(opts.steps):
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("non-finite CPT supergradient during gradient ascent")
        # J^T g with J symmetric: w * (g - <w, g>)
        gx = W * (grad - np.einsum("bi,bi->b", W, grad)[:, None])
        X = X + step_size(k, opts) * _direction(gx, opts)
        W = _softmax(X)
        util, grad = cpt_supergradient_batch(W, R, params)
        better = util > best_u
        best_u = np.where(better, util, best_u)
        best_w[better] = W[better]
        if opts.record_trace:
            trace.append(best_u.copy())
    return best_w, best_u, np.array(trace).reshape(len(trace), W.shape[0])


def _dispatch(block_fn, method, starts, R, params, C, opts):
    R = as_returns(R)
    opts = opts or GaOptions()
    if opts.steps < 1:
        raise ValueError("steps must be at least 1")
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    if starts.shape[1] != R.shape[1]:
        raise ValueError(f"starts have {starts.shape[1]} weights for {R.shape[1]} assets")
    t0 = time.perf_counter()
    W0 = project(starts, C) if C is not None else starts / starts.sum(axis=1, keepdims=True)
    threads = max(1, int(opts.threads))
    blocks = np.array_split(np.arange(W0.shape[0]), min(threads, W0.shape[0]))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda idx: block_fn(W0[idx], R, params, C, opts), blocks))
    else:
        parts = [block_fn(W0[idx], R, params, C, opts) for idx in blocks]
    best_w = np.concatenate([p[0] for p in parts])
    best_u = np.concatenate([p[1] for p in parts])
    trace = np.concatenate([p[2] for p in parts], axis=1)

    records = [
        StartRecord(
            start=starts[i], weights=best_w[i], utility=float(best_u[i]), iterations=opts.steps,
            utility_trace=trace[:, i].tolist(), termination="steps",
        )
        for i in range(starts.shape[0])
    ]
    return SolveReport(
        method=method, records=records, timings={"solve": time.perf_counter() - t0},
        config={"steps": opts.steps, "eta0": opts.eta0, "threads": threads},
        dataset=dataset_fingerprint(R),
    )


def ga_optimize(starts, R, params: CptParams, C: ConstraintSet | None = None,
                opts: GaOptions | None = None) -> SolveReport:
    """Projected gradient ascent from every row of ``starts``.

    Each step moves along the supergradient scaled to unit length, so the
    step ``eta0 / (1 + k / K)`` with ``K = steps / 2`` is the distance moved
    before projection. Each start keeps its best-seen portfolio.
    """
    R = as_returns(R)
    C = C or ConstraintSet.long_only(R.shape[1])
    return _dispatch(_run_block, "ga", starts, R, params, C, opts)


def ga_softmax_optimize(starts, R, params: CptParams, opts: GaOptions | None = None,
                        C: ConstraintSet | None = None) -> SolveReport:
    """Gradient ascent in logits ``x`` with ``w = softmax(x)`` (long-only portfolios)."""
    R = as_returns(R)
    if C is not None and not C.is_long_only:
        raise ValueError("softmax parametrization only covers long-only constraints")
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    if np.any(starts < 0):
        raise ValueError("softmax starts must be nonnegative")
    rep = _dispatch(_run_block_softmax, "ga-softmax", starts, R, params, None, opts)
    return rep
