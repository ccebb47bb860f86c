import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wcsmooth.core import AbsLoss, MaxQuadraticProblem, RobustLoss, RobustRegressionProblem, finite_diff_gradient
from wcsmooth.errors import CapabilityError, ParameterError
from wcsmooth.smoothing import (HuberAbs, HuberRobust, IdentityOuter, MoreauAbs, MoreauRobust,
                                PositivePartOuter, QuadraticSmooth, SoftmaxMax, combine_minibatch,
                                combine_sum, compose_convex_outer, huber, make_smoothed, moreau_envelope,
                                moreau_params, precompose_linear, prox_abs_quadratic, prox_linear,
                                smooth_losses, softmax_meta, softmax_smooth)
from wcsmooth.smoothing.combinators import FiniteSumSmoothed, OuterFunction


@pytest.mark.parametrize("z, eta, value, deriv", [
    (0.0, 1.0, 0.0, 0.0),
    (0.5, 1.0, 0.125, 0.5),
    (2.0, 1.0, 1.5, 1.0),
    (-2.0, 1.0, 1.5, -1.0),
])
def test_huber_examples(z, eta, value, deriv):
    assert huber(z, eta) == pytest.approx((value, deriv), abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(st.floats(-1e3, 1e3), st.floats(1e-3, 10.0))
def test_huber_sandwich(z, eta):
    v, _ = huber(z, eta)
    assert v <= abs(z) + 1e-12
    assert abs(z) <= v + eta / 2 + 1e-12


def test_huber_rejects_bad_eta():
    with pytest.raises(ParameterError):
        huber(1.0, 0.0)


def test_softmax_examples():
    v, g, w = softmax_smooth([0.0, 0.0], np.eye(2), 1.0)
    assert v == pytest.approx(math.log(2), abs=1e-15)
    np.testing.assert_allclose(w, [0.5, 0.5])
    v, _, _ = softmax_smooth([3.0, 0.0], np.eye(2), 0.5)
    # independent evaluation: 0.5 log(e^6 + 1) = 3 + 0.5 log(1 + e^-6)
    assert v == pytest.approx(3.0 + 0.5 * math.log1p(math.exp(-6.0)), rel=1e-15)
    assert v == pytest.approx(3.0012379, abs=1e-7)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e4, 1e4), min_size=1, max_size=12), st.floats(1e-3, 10.0))
def test_softmax_bounds_and_simplex(vals, eta):
    vals = np.array(vals)
    v, g, w = softmax_smooth(vals, np.ones((vals.size, 1)), eta)
    assert vals.max() - 1e-9 <= v <= vals.max() + eta * math.log(vals.size) + 1e-9 * max(1.0, abs(v))
    assert np.all(w >= 0)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert g[0] == pytest.approx(1.0, abs=1e-12)


def test_softmax_no_overflow():
    v, _, w = softmax_smooth([1e6, 0.0], np.eye(2), 1e-3)
    assert v == pytest.approx(1e6)
    assert np.isfinite(w).all()


def test_softmax_meta():
    assert softmax_meta([3.0], 0.5).R_eta == 0.0
    assert softmax_meta([3.0], 0.5).rho_bar == 3.0
    assert softmax_meta([1.0] * 5, 0.8).R_eta == pytest.approx(0.8 * math.log(5))
    assert 0.8 * math.log(5) == pytest.approx(1.2875503, abs=1e-7)
    with pytest.raises(ParameterError):
        softmax_meta([-1.0], 1.0)


def test_softmax_meta_rho_bar_is_max_hessian_norm():
    rng = np.random.default_rng(0)
    As = np.array([(lambda C: C @ C.T)(rng.normal(size=(3, 3))) for _ in range(4)])
    obj = SoftmaxMax(MaxQuadraticProblem(As, rng.normal(size=(4, 3))), 0.5)
    assert obj.meta.rho_bar == pytest.approx(max(np.linalg.norm(A, 2) for A in As))
    assert obj.convex


@pytest.mark.parametrize("rho, eta, expected", [
    (1.0, 0.1, (11.0, 2.0, 12.0)),
    (0.0, 0.5, (2.0, 0.0, 2.0)),
    # 2 rho + 1/eta = 5 here
    (2.0, 1.0, (4.0, 4.0, 5.0)),
])
def test_moreau_params(rho, eta, expected):
    assert moreau_params(rho, eta) == pytest.approx(expected)


def test_moreau_envelope_abs_examples():
    f = AbsLoss(1)
    v, g, y = moreau_envelope(f, 1.0, np.array([2.0]))
    assert (v, g[0], y[0]) == pytest.approx((1.5, 1.0, 1.0))
    v, g, y = moreau_envelope(f, 1.0, np.array([0.3]))
    assert (v, g[0], y[0]) == pytest.approx((0.045, 0.3, 0.0))
    # the envelope of |.| at level beta is the Huber function at 1/beta
    assert v == pytest.approx(huber(0.3, 1.0)[0])


def test_moreau_envelope_abs_matches_grid():
    grid = np.arange(-3.0, 3.0, 1e-5)
    for x in (2.0, 0.3, -1.7):
        obj = np.abs(grid) + 0.5 * (grid - x) ** 2
        _, _, y = moreau_envelope(AbsLoss(1), 1.0, np.array([x]))
        assert abs(y[0] - grid[np.argmin(obj)]) < 2e-5


def test_moreau_envelope_fixed_point():
    loss = RobustLoss(np.array([1.0, 0.0]), 1.0, "quad")
    _, g, _ = moreau_envelope(loss, 10.0, np.array([1.0, 0.3]))
    np.testing.assert_allclose(g, 0.0, atol=1e-10)


def test_moreau_envelope_needs_prox():
    class NoProx:
        rho = 0.0

        def value(self, x):
            return 0.0

    with pytest.raises(CapabilityError):
        moreau_envelope(NoProx(), 1.0, np.zeros(1))


def _grid_min(fun, lo, hi, step=1e-5):
    grid = np.arange(lo, hi, step)
    vals = fun(grid)
    j = int(np.argmin(vals))
    return grid[j], vals[j]


def test_prox_abs_quadratic_at_kink():
    e1 = np.array([1.0, 0.0, 0.0])
    y, val, _ = prox_abs_quadratic(e1, None, -1.0, np.zeros(3), 10.0)
    ym, vm = _grid_min(lambda t: np.abs(t * t - 1) + 5 * t * t, -3, 3)
    np.testing.assert_allclose(y, [ym, 0, 0], atol=2e-5)
    assert val == pytest.approx(1.0)
    assert vm == pytest.approx(1.0, abs=1e-8)


def test_prox_abs_quadratic_smooth_branch():
    e1 = np.array([1.0, 0.0])
    y, val, _ = prox_abs_quadratic(e1, None, -1.0, 2 * e1, 10.0)
    ym, vm = _grid_min(lambda t: np.abs(t * t - 1) + 5 * (t - 2) ** 2, -3, 3)
    assert y[0] == pytest.approx(5 / 3, abs=1e-9)
    assert abs(y[0] - ym) < 2e-5
    # |25/9 - 1| + 5 (1/3)^2
    assert val == pytest.approx(7 / 3, abs=1e-12)
    assert vm == pytest.approx(7 / 3, abs=1e-8)


def test_prox_abs_quadratic_large_gamma_stays_at_zero_of_F():
    a = np.array([0.6, 0.8])
    xbar = a * 1.0  # F(xbar) = (a.xbar)^2 - 1 = 0
    y, val, _ = prox_abs_quadratic(a, None, -1.0, xbar, 1e6)
    np.testing.assert_allclose(y, xbar, atol=1e-9)
    assert val == pytest.approx(0.0, abs=1e-9)


def test_prox_abs_quadratic_rejects_small_gamma():
    with pytest.raises(ParameterError):
        prox_abs_quadratic(np.array([1.0]), None, 0.0, np.zeros(1), 2.0)


def test_prox_linear_affine_one_step():
    c = np.array([1.0, -2.0])
    calls = []

    def F(x):
        calls.append(1)
        return float(c @ x - 3.0), c.copy()

    xbar = np.array([4.0, 1.0])
    y = prox_linear(F, xbar, 2.0, tol=1e-14)
    # exact prox of |c.x - 3| at weight 2: move along c by a shrunk residual
    u = c @ xbar - 3.0
    step = min(abs(u) / (c @ c), 1.0 / 2.0) * np.sign(u)
    np.testing.assert_allclose(y, xbar - step * c, atol=1e-14)
    assert len(calls) <= 2


def test_prox_linear_matches_dual_search():
    e1 = np.array([1.0, 0.0])
    loss = RobustLoss(e1, 1.0, "quad")
    y = prox_linear(loss.residual, 2 * e1, 10.0, curvature=loss.rho, tol=1e-10)
    yd = prox_abs_quadratic(e1, None, -1.0, 2 * e1, 10.0)[0]
    assert y[0] == pytest.approx(5 / 3, abs=1e-9)
    np.testing.assert_allclose(y, yd, atol=1e-9)


def test_prox_linear_fixed_point_at_minimizer():
    loss = RobustLoss(np.array([1.0]), 4.0, "quad")
    y = prox_linear(loss.residual, np.array([2.0]), 10.0, curvature=loss.rho)
    assert y[0] == pytest.approx(2.0, abs=1e-12)


def test_prox_linear_reports_nonconvergence():
    from wcsmooth.errors import ConvergenceError

    loss = RobustLoss(np.array([1.0]), 1.0, "quad")
    with pytest.raises(ConvergenceError) as err:
        prox_linear(loss.residual, np.array([2.0]), 10.0, curvature=loss.rho, tol=1e-16, max_iter=2)
    assert err.value.last is not None


def _robust(seed=0, m=8, n=3, hkind="quad"):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n))
    return RobustRegressionProblem(A, rng.normal(size=m) + 1.0, hkind)


@pytest.mark.parametrize("cls", [HuberRobust, MoreauRobust])
def test_robust_smoothers_gradients(cls):
    obj = cls(_robust(), 0.5)
    rng = np.random.default_rng(3)
    for _ in range(5):
        x = rng.normal(size=3)
        fd = finite_diff_gradient(obj.value, x, 1e-6)
        np.testing.assert_allclose(obj.grad(x), fd, rtol=1e-5, atol=1e-6)


def test_huber_finite_sum_meta():
    prob = _robust()
    obj = smooth_losses(prob.losses, "huber", 0.4)
    assert obj.meta.rho_bar == pytest.approx(np.mean(2 * (prob.A**2).sum(axis=1)))
    assert obj.meta.R_at() == pytest.approx(0.2)


def test_moreau_meta_matches_params():
    loss = RobustLoss(np.array([1.0, 1.0]), 0.5, "quad")
    obj = smooth_losses([loss], "moreau", 0.1)
    beta, rho_bar, L = moreau_params(loss.rho, 0.1)
    assert obj.beta[0] == pytest.approx(beta)
    assert obj.meta.rho_bar == pytest.approx(rho_bar)
    assert obj.meta.L_at() == pytest.approx(L)


def test_make_smoothed_capabilities():
    prob = _robust()
    assert isinstance(make_smoothed(prob, "huber", 1.0), HuberRobust)
    with pytest.raises(CapabilityError):
        make_smoothed(prob, "softmax", 1.0)


def test_combine_sum_identity_and_halves():
    obj = HuberRobust(_robust(), 0.5)
    x = np.array([0.3, -0.2, 0.9])
    one = combine_sum([(obj, 1.0)])
    assert one.value(x) == obj.value(x)
    np.testing.assert_array_equal(one.grad(x), obj.grad(x))
    halves = combine_sum([(obj, 0.5), (obj, 0.5)])
    assert halves.value(x) == pytest.approx(obj.value(x), rel=1e-15)
    assert halves.meta.rho_bar == pytest.approx(obj.meta.rho_bar)
    assert halves.meta.R_at(x) == pytest.approx(obj.meta.R_at(x))
    assert halves.meta.L_at(x, x) == pytest.approx(obj.meta.L_at(x, x))


def test_combine_sum_rejects_mixed_eta():
    with pytest.raises(ParameterError):
        combine_sum([(HuberAbs(1, 0.5), 1.0), (HuberAbs(1, 0.4), 1.0)])


def test_minibatch_full_batch_equals_gradient():
    obj = HuberRobust(_robust(), 0.5)
    x = np.array([0.3, -0.2, 0.9])
    orc = combine_minibatch(obj, None, 0.5, None, np.random.default_rng(0))
    np.testing.assert_allclose(orc(x), obj.grad(x), rtol=1e-14)


def test_minibatch_identical_samples():
    loss = RobustLoss(np.array([1.0, 2.0]), 0.3, "quad")
    orc = combine_minibatch([loss, loss], "huber", 0.5, 1, np.random.default_rng(1))
    x = np.array([0.2, 0.1])
    full = orc.objective.grad(x)
    for _ in range(5):
        np.testing.assert_allclose(orc(x), full, rtol=1e-14)


@pytest.mark.parametrize("m", [2, 4, 8])
def test_minibatch_unbiased_by_enumeration(m):
    rng = np.random.default_rng(m)
    parts = []
    for _ in range(m):
        C = rng.normal(size=(3, 3))
        parts.append(QuadraticSmooth(C @ C.T, rng.normal(size=3)))
    obj = FiniteSumSmoothed(parts)
    x = rng.normal(size=3)
    avg = np.mean([obj.batch_value_grad(x, [i])[1] for i in range(m)], axis=0)
    np.testing.assert_allclose(avg, obj.grad(x), rtol=1e-12)


def test_minibatch_memory_limit():
    obj = HuberAbs(10, 1.0)
    with pytest.raises(ParameterError):
        combine_minibatch(obj, None, 1.0, 2**40, np.random.default_rng(0))


def test_compose_identity_outer_is_inner():
    inner = HuberRobust(_robust(), 0.5)
    comp = compose_convex_outer(IdentityOuter(), inner)
    x = np.array([0.1, 0.4, -0.3])
    assert comp.value(x) == pytest.approx(inner.value(x))
    np.testing.assert_allclose(comp.grad(x), inner.grad(x))
    assert comp.meta.rho_bar == pytest.approx(inner.meta.rho_bar)


def test_compose_positive_part_of_affine_is_convex():
    inner = QuadraticSmooth(np.zeros((2, 2)), np.array([1.0, -1.0]), eta=0.5)
    comp = compose_convex_outer(PositivePartOuter(1, 0.5), inner)
    assert comp.meta.rho_bar == 0.0
    x = np.array([0.3, 2.0])
    np.testing.assert_allclose(comp.grad(x), finite_diff_gradient(comp.value, x), atol=1e-8)


def test_compose_rho_bar_substitution():
    inner = QuadraticSmooth(np.array([[-2.0]]), eta=1.0)
    assert inner.meta.rho_bar == 2.0
    assert compose_convex_outer(IdentityOuter(), inner).meta.rho_bar == pytest.approx(2.0)


def test_compose_rejects_non_monotone_outer():
    class Abs(OuterFunction):
        lipschitz, nondecreasing, smoothness = 1.0, False, 0.0

    with pytest.raises(CapabilityError):
        compose_convex_outer(Abs(), HuberAbs(1, 1.0))


def test_precompose_identity_and_scaling():
    g = QuadraticSmooth(np.array([[-1.0, 0.0], [0.0, 3.0]]))
    same = precompose_linear(g, np.eye(2))
    x = np.array([0.7, -0.2])
    assert same.value(x) == g.value(x)
    assert same.meta.rho_bar == g.meta.rho_bar
    assert precompose_linear(g, 2 * np.eye(2)).meta.rho_bar == pytest.approx(4.0)


def test_precompose_huber_row():
    a = np.array([[0.5, -1.0, 2.0]])
    f = precompose_linear(HuberAbs(1, 0.3), a)
    for x in (np.array([0.1, 0.2, 0.3]), np.array([0.01, 0.0, -0.02])):
        expected = huber(float(a[0] @ x), 0.3)[1] * a[0]
        np.testing.assert_allclose(f.grad(x), expected, atol=1e-15)
        np.testing.assert_allclose(f.grad(x), finite_diff_gradient(f.value, x), atol=1e-8)


@pytest.mark.parametrize("cls", [HuberAbs, MoreauAbs])
def test_abs_smoothers_agree(cls):
    obj = cls(1, 0.7)
    for z in np.linspace(-2, 2, 9):
        assert obj.value(np.array([z])) == pytest.approx(huber(z, 0.7)[0], abs=1e-14)


def test_moreau_sandwich_with_subgradient_descriptor():
    obj = MoreauRobust(_robust(seed=4), 0.3)
    rng = np.random.default_rng(9)
    for _ in range(50):
        x = rng.normal(size=3)
        fe, f = obj.value(x), obj.true_value(x)
        assert fe <= f + 1e-12
        assert f <= fe + obj.meta.R_at(x) + 1e-12


def test_envelope_curvature_bounds_abs():
    # both quadratic bounds of the Moreau envelope of |.| at level beta
    beta = 2.0
    obj = MoreauAbs(1, 1.0 / beta)
    rng = np.random.default_rng(0)
    for _ in range(200):
        x, y = rng.normal(scale=2.0, size=(2, 1))
        fx, gx = obj.value_grad(x)
        fy = obj.value(y)
        lin = fx + float(gx @ (y - x))
        d2 = float(np.sum((y - x) ** 2))
        assert fy <= lin + 0.5 * beta * d2 + 1e-12
        assert fy >= lin - 1e-12  # convex, rho = 0
