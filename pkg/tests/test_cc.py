import numpy as np
import pytest

from cptport.cc import (
    CcOptions,
    ConfigurationError,
    build_surrogate,
    cc_optimize,
    cc_step,
    f_ccv,
    f_cvx,
    linearize_f_cvx,
)
from cptport.constraints import ConstraintSet, is_feasible
from cptport.core import CptParams, decision_weights, pt_value, sort_returns
from cptport.data import dirichlet_starts, toy_returns


def test_f_ccv_examples(params):
    assert f_ccv(0.0, params) == 0.0
    for x in (-0.3, -0.01, -2.0):
        assert f_ccv(x, params) == params.gamma_neg * x
    assert f_ccv(0.1, params) == pytest.approx(1 - np.exp(-0.84), abs=1e-15)


def test_f_ccv_requires_loss_aversion():
    with pytest.raises(ConfigurationError, match="convex-concave solver"):
        f_ccv(0.1, CptParams(2.0, 1.0, 0.8, 0.8))
    with pytest.raises(ConfigurationError):
        cc_optimize([1.0], np.zeros((3, 1)), CptParams(1.0, 1.0, 0.8, 0.8))


def test_f_ccv_midpoint_concave(params):
    rng = np.random.default_rng(0)
    x, y = rng.uniform(-1, 1, size=(2, 1000))
    assert np.all(f_ccv((x + y) / 2, params) >= (f_ccv(x, params) + f_ccv(y, params)) / 2 - 1e-12)


def test_f_cvx_examples(params):
    assert f_cvx(0.0, params) == 0.0
    assert np.all(f_cvx(np.linspace(0, 3, 50), params) == 0.0)
    x = np.linspace(-1, 0, 1001)
    assert np.all(f_cvx(x, params) >= 0)


def test_decomposition_identity(params):
    x = np.linspace(-1, 1, 10001)
    err = np.abs(f_ccv(x, params) + f_cvx(x, params) - pt_value(x, params))
    assert err.max() <= 1e-12


def test_linearize_examples(params):
    s, b = linearize_f_cvx(0.0, params)
    assert (s, b) == (0.0, 0.0)
    s, b = linearize_f_cvx(0.2, params)
    assert (s, b) == (0.0, 0.0)
    x_hat = -0.05
    s, b = linearize_f_cvx(x_hat, params)
    assert s == pytest.approx(params.gamma_neg * np.expm1(params.gamma_neg * x_hat), abs=1e-15)
    assert s * x_hat + b == pytest.approx(f_cvx(x_hat, params), abs=1e-15)


def test_supporting_line(params):
    rng = np.random.default_rng(1)
    x_hat, x = rng.uniform(-1, 0.5, size=(2, 1000))
    s, b = linearize_f_cvx(x_hat, params)
    assert np.all(s * x + b <= f_cvx(x, params) + 1e-12)


def test_surrogate_layout_matches_decision_weights(params, toy):
    for w in dirichlet_starts(3, 10, seed=2):
        s = build_surrogate(w, toy, params)
        ctx = sort_returns(w, toy)
        dw = decision_weights(toy.shape[0] - ctx.n_neg, ctx.n_neg, params)
        assert np.array_equal(s.pi[:ctx.n_neg], dw.tail_neg[::-1])
        assert np.array_equal(s.pi[ctx.n_neg:], dw.tail_pos)
        assert np.array_equal(s.rows, toy[ctx.order])
        assert np.all(s.pi >= 0)


def test_surrogate_tangency_and_lower_bound(params):
    R = np.random.default_rng(3).normal(0.004, 0.04, size=(120, 5))
    points = dirichlet_starts(5, 300, seed=4)
    for w_hat in dirichlet_starts(5, 5, seed=5):
        s = build_surrogate(w_hat, R, params)
        assert s.value(w_hat) == pytest.approx(s.fixed_weights_value(w_hat), abs=1e-10)
        for w in points:
            assert s.value(w) <= s.fixed_weights_value(w) + 1e-9


def test_cc_step_properties(params, toy):
    C = ConstraintSet.long_only(3)
    w_hat = np.full(3, 1 / 3)
    w, s = cc_step(w_hat, toy, params, C, 0.1)
    assert is_feasible(w, C, 1e-8)
    assert np.max(np.abs(w - w_hat)) <= 0.1 + 1e-9
    assert s.value(w) >= s.value(w_hat) - 1e-8
    assert s.fixed_weights_value(w) >= s.fixed_weights_value(w_hat) - 1e-8


def test_cc_step_at_stationary_point(params, toy):
    C = ConstraintSet.long_only(3)
    w_hat = cc_optimize(np.full(3, 1 / 3), toy, params).best.weights
    w, s = cc_step(w_hat, toy, params, C, 1.0)
    assert s.value(w) >= s.value(w_hat) - 1e-8


def test_accepted_steps_never_decrease(params):
    for seed in range(3):
        R = toy_returns(seed).values
        rec = cc_optimize(np.full(3, 1 / 3), R, params).best
        trace = np.array(rec.utility_trace)
        assert np.all(np.diff(trace) >= -1e-8)
        assert rec.iterations <= 200


def test_toy_from_equal_weights(params, toy, toy_optimum):
    rec = cc_optimize(np.full(3, 1 / 3), toy, params).best
    assert rec.utility >= toy_optimum.utility - 1e-3
    assert is_feasible(rec.weights, ConstraintSet.long_only(3), 1e-8)


def test_start_at_corner_optimum(params):
    R = toy_returns(9).values  # optimum at the bonds corner
    w = np.array([0.0, 1.0, 0.0])
    u0 = cc_optimize(w, R, params, opts=CcOptions(max_outer=1)).best.utility_trace[0]
    rec = cc_optimize(w, R, params).best
    assert abs(rec.utility - u0) <= 1e-6


def test_trust_radius_trace(params, toy):
    rec = cc_optimize(np.full(3, 1 / 3), toy, params).best
    radii = rec.extra["trust_radius_trace"]
    assert radii[0] == 0.1
    assert all(r <= 1.0 for r in radii)
    assert rec.termination in ("converged", "trust region collapsed", "max_outer")
