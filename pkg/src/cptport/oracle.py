"""Exhaustive grid maximization of CPT utility for two or three assets."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintSet
from .core import CptParams, as_returns, cpt_utility_batch


@dataclass
class GridResult:
    weights: np.ndarray
    utility: float
    local_maxima: list[tuple[np.ndarray, float]]
    points: np.ndarray
    utilities: np.ndarray
    index: np.ndarray

    def local_maximum_weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.local_maxima]).reshape(-1, self.points.shape[1])


def _grid_indices(C: ConstraintSet, step: float) -> tuple[np.ndarray, np.ndarray]:
    lo, hi = C.effective_bounds()
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ValueError("grid search needs bounded weights")
    kmin = np.ceil(lo / step - 1e-9).astype(int)
    kmax = np.floor(hi / step + 1e-9).astype(int)
    n = C.n
    axes = [np.arange(kmin[i], kmax[i] + 1) for i in range(n - 1)]
    mesh = np.meshgrid(*axes, indexing="ij")
    index = np.stack([m.ravel() for m in mesh], axis=1)
    W = index * step
    last = C.budget - W.sum(axis=1)
    tol = 1e-12
    keep = (last >= C.lower[-1] - tol) & (last <= C.upper[-1] + tol)
    W = np.column_stack([W, last])[keep]
    return W, index[keep]


def grid_points(C: ConstraintSet, step: float) -> np.ndarray:
    """Feasible grid points in lexicographic order of the leading weights."""
    return _grid_indices(C, step)[0]


def _neighbor_offsets(n_free: int) -> np.ndarray:
    # moves that shift one grid step between a pair of assets
    offsets = []
    eye = np.eye(n_free, dtype=int)
    for i in range(n_free):
        offsets.append(eye[i])
        offsets.append(-eye[i])
        for j in range(i + 1, n_free):
            offsets.append(eye[i] - eye[j])
            offsets.append(eye[j] - eye[i])
    return np.array(offsets)


def grid_search(R, params: CptParams, C: ConstraintSet | None = None, step: float = 0.005,
                chunk: int = 20000, threads: int = 1) -> GridResult:
    R = as_returns(R)
    n = R.shape[1]
    if n not in (2, 3):
        raise ValueError(f"grid search supports 2 or 3 assets, got {n}")
    if not (0 < step <= 0.1):
        raise ValueError(f"grid step must lie in (0, 0.1], got {step}")
    C = C or ConstraintSet.long_only(n)
    W, index = _grid_indices(C, step)
    if W.shape[0] == 0:
        raise ValueError("no feasible grid points")
    chunks = [W[i:i + chunk] for i in range(0, W.shape[0], chunk)]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda block: cpt_utility_batch(block, R, params), chunks))
    else:
        parts = [cpt_utility_batch(block, R, params) for block in chunks]
    util = np.concatenate(parts)

    best = int(np.argmax(util))

    # local maxima on the grid lattice
    base = index.min(axis=0)
    shape = tuple(index.max(axis=0) - base + 3)
    slot = np.full(shape, -1, dtype=np.int64)
    slot[tuple((index - base + 1).T)] = np.arange(len(util))
    is_max = np.ones(len(util), dtype=bool)
    for off in _neighbor_offsets(n - 1):
        nb = slot[tuple((index - base + 1 + off).T)]
        has = nb >= 0
        is_max[has] &= util[has] >= util[nb[has]]
    local = [(W[i].copy(), float(util[i])) for i in np.flatnonzero(is_max)]
    return GridResult(
        weights=W[best].copy(), utility=float(util[best]), local_maxima=local,
        points=W, utilities=util, index=index,
    )
