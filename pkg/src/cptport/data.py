"""Return data: CSV ingestion, Gaussian mixture synthesis and random starts."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .core import ReturnsMatrix, as_returns


class ReturnsFileError(ValueError):
    pass


def load_returns_csv(path, delimiter: str = ",") -> ReturnsMatrix:
    """Read a header of asset names followed by one row of simple returns per period."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"returns file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    rows = [r for r in rows if r and any(cell.strip() for cell in r)]
    if not rows:
        raise ReturnsFileError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if not header or any(not h for h in header):
        raise ReturnsFileError(f"{path}: header row must name every asset")
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ReturnsFileError(
                f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}"
            )
        parsed = []
        for col, cell in enumerate(row, start=1):
            try:
                x = float(cell)
            except ValueError:
                raise ReturnsFileError(
                    f"{path}: row {lineno}, column {col}: not a number: {cell!r}"
                ) from None
            if not math.isfinite(x):
                raise ReturnsFileError(f"{path}: row {lineno}, column {col}: non-finite value {cell!r}")
            parsed.append(x)
        values.append(parsed)
    if not values:
        raise ReturnsFileError(f"{path}: no data rows")
    return ReturnsMatrix(np.array(values, dtype=float), tuple(header))


def write_returns_csv(path, R, asset_names=None) -> None:
    values = as_returns(R)
    if asset_names is None:
        asset_names = R.asset_names if isinstance(R, ReturnsMatrix) else [f"asset{i}" for i in range(values.shape[1])]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(asset_names)
        for row in values:
            # repr round-trips every double exactly
            writer.writerow([repr(float(x)) for x in row])


# ----------------------------------------------------------------------------
# Gaussian mixture
# ----------------------------------------------------------------------------

@dataclass
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    log_likelihood_trace: tuple[float, ...] = ()

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def n(self) -> int:
        return self.means.shape[1]


def _kmeans_pp(X, k, rng):
    centers = [X[rng.integers(X.shape[0])]]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = d2.sum()
        idx = rng.choice(X.shape[0], p=d2 / total) if total > 0 else rng.integers(X.shape[0])
        centers.append(X[idx])
        d2 = np.minimum(d2, np.sum((X - X[idx]) ** 2, axis=1))
    return np.array(centers)


def _log_gaussian(X, mean, cov):
    n = X.shape[1]
    L = np.linalg.cholesky(cov)
    z = np.linalg.solve(L, (X - mean).T)
    return -0.5 * np.sum(z * z, axis=0) - np.log(np.diag(L)).sum() - 0.5 * n * np.log(2 * np.pi)


def _regularize(cov, reg):
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    if vals.min() < reg:
        cov = (vecs * np.maximum(vals, reg)) @ vecs.T
        cov = 0.5 * (cov + cov.T)
    return cov


def fit_gmm(R, k: int = 3, seed: int = 0, max_iter: int = 200, tol: float = 1e-8,
            reg: float = 1e-10) -> GmmModel:
    """Full-covariance EM, initialized with seeded k-means++ assignments."""
    X = as_returns(R)
    N, n = X.shape
    if N < k:
        raise ValueError(f"need at least {k} samples to fit {k} components, got {N}")
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(X, k, rng)
    labels = np.argmin(((X[:, None, :] - centers[None]) ** 2).sum(axis=2), axis=1)
    resp = np.zeros((N, k))
    resp[np.arange(N), labels] = 1.0

    trace: list[float] = []
    best = None
    for _ in range(max_iter):
        # M-step
        nk = resp.sum(axis=0) + 10 * np.finfo(float).eps
        weights = nk / N
        means = (resp.T @ X) / nk[:, None]
        covs = np.empty((k, n, n))
        for j in range(k):
            d = X - means[j]
            covs[j] = _regularize((resp[:, j, None] * d).T @ d / nk[j] + reg * np.eye(n), reg)
        # E-step
        logp = np.column_stack([np.log(weights[j]) + _log_gaussian(X, means[j], covs[j]) for j in range(k)])
        norm = logsumexp(logp, axis=1)
        ll = float(norm.sum())
        resp = np.exp(logp - norm[:, None])
        if trace and ll < trace[-1]:
            # regularization near a collapsing component can cost a little
            # likelihood; keep the previous parameters and stop
            break
        best = (weights, means, covs)
        converged = bool(trace) and ll - trace[-1] < tol
        trace.append(ll)
        if converged:
            break
    weights, means, covs = best
    return GmmModel(weights=weights / weights.sum(), means=means, covariances=covs,
                    log_likelihood_trace=tuple(trace))


def gmm_log_likelihood(model: GmmModel, R) -> float:
    X = as_returns(R)
    logp = np.column_stack([
        np.log(model.weights[j]) + _log_gaussian(X, model.means[j], _regularize(model.covariances[j], 1e-300))
        for j in range(model.k)
    ])
    return float(logsumexp(logp, axis=1).sum())


def _matrix_sqrt(cov):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def sample_gmm(model: GmmModel, count: int, seed: int = 0) -> np.ndarray:
    """Draw ``count`` rows: pick a component by weight, then ``mean + L z``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    comp = rng.choice(model.k, size=count, p=model.weights)
    z = rng.standard_normal((count, model.n))
    out = np.empty((count, model.n))
    for j in range(model.k):
        idx = comp == j
        out[idx] = model.means[j] + z[idx] @ _matrix_sqrt(model.covariances[j]).T
    return out


def dirichlet_starts(n: int, count: int, alpha: float = 1.0, seed: int = 0) -> np.ndarray:
    """``count`` portfolios drawn from a symmetric Dirichlet; ``alpha=1`` is uniform on the simplex."""
    if count < 1:
        raise ValueError("count must be at least 1")
    if n == 1:
        return np.ones((count, 1))
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.full(n, float(alpha)), size=count)


# ----------------------------------------------------------------------------
# Synthetic toy data
# ----------------------------------------------------------------------------

def toy_model() -> GmmModel:
    """Calm/crisis mixture of monthly stock, bond and bill returns.

    Crises are rare, deep equity drawdowns with bonds rallying; it produces
    CPT utility surfaces with interior and sometimes multiple optima.
    """
    sd_calm = np.array([0.035, 0.02, 0.002])
    sd_crisis = np.array([0.07, 0.03, 0.002])
    corr_calm = np.array([[1, 0.1, 0], [0.1, 1, 0.2], [0, 0.2, 1]])
    corr_crisis = np.array([[1, -0.3, 0], [-0.3, 1, 0.1], [0, 0.1, 1]])
    return GmmModel(
        weights=np.array([0.85, 0.15]),
        means=np.array([[0.013, 0.004, 0.0035], [-0.04, 0.012, 0.003]]),
        covariances=np.array([
            np.diag(sd_calm) @ corr_calm @ np.diag(sd_calm),
            np.diag(sd_crisis) @ corr_crisis @ np.diag(sd_crisis),
        ]),
    )


def toy_returns(seed: int = 0, N: int = 200) -> ReturnsMatrix:
    return ReturnsMatrix(sample_gmm(toy_model(), N, seed), ("stocks", "bonds", "bills"))


def synthetic_market(N: int = 600, n: int = 14, seed: int = 0) -> ReturnsMatrix:
    """One-factor monthly returns with a crisis regime, for scaling experiments."""
    rng = np.random.default_rng(seed)
    beta = rng.uniform(-0.2, 1.2, n)
    mu = 0.002 + 0.006 * rng.random(n)
    idio = 0.005 + 0.03 * rng.random(n)
    crisis = rng.random(N) < 0.12
    factor = np.where(crisis, rng.normal(-0.03, 0.06, N), rng.normal(0.008, 0.03, N))
    values = mu + np.outer(factor, beta) + rng.standard_normal((N, n)) * idio
    return ReturnsMatrix(values, tuple(f"asset{i:02d}" for i in range(n)))
