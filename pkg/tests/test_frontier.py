import numpy as np
import pytest

from cptport.constraints import ConstraintSet, is_feasible
from cptport.data import toy_returns
from cptport.frontier import (
    MomentEstimates,
    estimate_moments,
    frontier,
    kkt_residual,
    mv_heuristic,
    mv_objective,
    solve_mv,
    volatility,
)


def test_moment_examples():
    m = estimate_moments(np.array([[0.0], [2.0]]))
    assert m.mu.tolist() == [1.0]
    assert m.sigma.tolist() == [[2.0]]
    m = estimate_moments(np.array([[0.1, 0.2], [0.1, 0.2]]))
    assert not m.sigma.any()
    with pytest.raises(ValueError):
        estimate_moments(np.ones((1, 3)))


def test_moments_two_pass():
    R = np.random.default_rng(0).normal(size=(40, 4))
    m = estimate_moments(R)
    N, n = R.shape
    mu = [sum(R[:, j]) / N for j in range(n)]
    cov = [[sum((R[k, i] - mu[i]) * (R[k, j] - mu[j]) for k in range(N)) / (N - 1) for j in range(n)] for i in range(n)]
    assert np.max(np.abs(m.mu - mu)) <= 1e-12
    assert np.max(np.abs(m.sigma - cov)) <= 1e-12
    assert np.array_equal(m.sigma, m.sigma.T)


def test_solve_mv_symmetric():
    m = MomentEstimates(np.full(4, 0.01), 0.04 * np.eye(4))
    assert np.allclose(solve_mv(2.0, m), 0.25, atol=1e-12)
    with pytest.raises(ValueError):
        solve_mv(0.0, m)


def test_solve_mv_two_asset_closed_form():
    mu = np.array([0.012, 0.005])
    S = np.array([[0.04, 0.006], [0.006, 0.01]])
    m = MomentEstimates(mu, S)
    C = ConstraintSet(np.full(2, -np.inf), np.full(2, np.inf))
    for gamma in (0.5, 2.0, 10.0):
        w1 = (mu[0] - mu[1] + 2 * gamma * (S[1, 1] - S[0, 1])) / (2 * gamma * (S[0, 0] + S[1, 1] - 2 * S[0, 1]))
        assert np.allclose(solve_mv(gamma, m, C), [w1, 1 - w1], atol=1e-9)


def test_solve_mv_kkt():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = int(rng.integers(2, 8))
        R = rng.normal(0.005, 0.04, size=(30, n))
        m = estimate_moments(R)
        C = ConstraintSet.box(n, 0.0, rng.uniform(1 / n + 0.05, 1.0)) if rng.random() < 0.5 else ConstraintSet.long_only(n)
        gamma = 10 ** rng.uniform(-3, 3)
        w = solve_mv(gamma, m, C)
        assert is_feasible(w, C, 1e-9)
        assert kkt_residual(w, gamma, m, C) <= 1e-6


def test_solve_mv_beats_random_feasible():
    R = toy_returns(1).values
    m = estimate_moments(R)
    w = solve_mv(3.0, m)
    best = mv_objective(w, 3.0, m)
    for v in np.random.default_rng(2).dirichlet(np.ones(3), size=500):
        assert mv_objective(v, 3.0, m) <= best + 1e-12


def test_degenerate_frontier():
    m = MomentEstimates(np.full(3, 0.01), 0.01 * np.eye(3))
    fr = frontier(m, K=10)
    assert fr.degenerate
    assert len(fr) == 10
    assert np.allclose(fr.weights, 1 / 3)


def test_two_point_frontier():
    m = estimate_moments(toy_returns(2).values)
    fr = frontier(m, K=2)
    assert len(fr) == 2
    assert np.array_equal(fr.weights[0], solve_mv(1e6, m))
    assert np.array_equal(fr.weights[1], solve_mv(1e-8, m))
    with pytest.raises(ValueError):
        frontier(m, K=1)


def test_frontier_shape():
    R = np.random.default_rng(3).normal(0.004, 0.04, size=(100, 5)) + np.linspace(0, 0.01, 5)
    m = estimate_moments(R)
    fr = frontier(m, K=100)
    assert not fr.degenerate
    gaps = np.diff(fr.volatilities)
    assert np.max(np.abs(gaps / gaps.mean() - 1)) <= 1e-4
    assert np.all(gaps >= 0)
    assert np.all(np.diff(fr.means) >= -1e-8)
    for w, vol, mean in fr.points():
        assert vol == pytest.approx(volatility(w, m), abs=1e-15)


def test_mv_heuristic_single_portfolio(params):
    R = np.random.default_rng(4).normal(size=(30, 1)) * 0.03
    res = mv_heuristic(R, params)
    assert res.weights.tolist() == [1.0]
    assert res.frontier.degenerate


def test_mv_heuristic_dominated_by_grid(params, toy, toy_optimum):
    res = mv_heuristic(toy, params)
    assert res.utility <= toy_optimum.utility + 1e-9
    assert res.utility == max(res.utilities)
    again = mv_heuristic(toy, params)
    assert np.array_equal(res.weights, again.weights) and res.gamma == again.gamma
