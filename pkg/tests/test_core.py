import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wcsmooth.core import (AbsLoss, BallIndicator, FiniteSumProblem, L1, RNGStream, RobustLoss,
                           RobustRegressionProblem, Zero, as_point, finite_diff_gradient, h_eval,
                           make_regularizer, pairwise_sum, prox, robust_rho, subgrad_robust_loss)
from wcsmooth.errors import ParameterError
from wcsmooth.smoothing import huber


@pytest.mark.parametrize("reg, x, gamma, expected", [
    (Zero(), (3.0, -1.0), 0.7, (3.0, -1.0)),
    (BallIndicator(1.0), (3.0, 4.0), 0.3, (0.6, 0.8)),
    (BallIndicator(1.0), (3.0, 4.0), 17.0, (0.6, 0.8)),
    (L1(1.0), (2.0, -0.5), 1.0, (1.0, 0.0)),
])
def test_prox_examples(reg, x, gamma, expected):
    np.testing.assert_allclose(prox(reg, x, gamma), expected, atol=1e-15)


def test_l1_prox_matches_grid_search():
    # separable, so a 1-D grid per coordinate is enough
    grid = np.arange(-3.0, 3.0, 1e-5)
    got = prox(L1(1.0), (2.0, -0.5), 1.0)
    for xi, pi in zip((2.0, -0.5), got):
        obj = np.abs(grid) + 0.5 * (grid - xi) ** 2
        assert abs(grid[np.argmin(obj)] - pi) < 2e-5


@pytest.mark.parametrize("reg", [Zero(), BallIndicator(1.0), L1(1.0)])
def test_prox_rejects_nonpositive_gamma(reg):
    with pytest.raises(ParameterError):
        prox(reg, (1.0, 2.0), 0.0)


def test_as_point_rejects_non_finite():
    with pytest.raises(ParameterError):
        as_point([1.0, np.nan])
    with pytest.raises(ParameterError):
        as_point(np.ones((2, 2)))


@pytest.mark.parametrize("kind", ["zero", "ball", "l1"])
def test_prox_optimality(kind):
    rng = np.random.default_rng(11)
    reg = make_regularizer(kind, 1.5 if kind != "zero" else None)
    for _ in range(100):
        x = rng.normal(scale=3.0, size=4)
        gamma = float(rng.uniform(0.05, 5.0))
        p = prox(reg, x, gamma)
        best = reg.value(p) + np.sum((p - x) ** 2) / (2 * gamma)
        Y = p + rng.normal(scale=rng.uniform(0.01, 2.0), size=(1000, 4))
        for y in Y:
            val = reg.value(y) + np.sum((y - x) ** 2) / (2 * gamma)
            assert best <= val + 1e-12


@pytest.mark.parametrize("hkind, a, b, x, value, sub", [
    ("quad", (1.0, 0.0), 1.0, (2.0, 0.0), 3.0, (4.0, 0.0)),
    ("quad", (1.0, 0.0), 4.0, (2.0, 0.0), 0.0, (0.0, 0.0)),
    ("quintic", (1.0, 0.0), 1.0, (1.0, 0.0), 2.0, (8.0, 0.0)),
])
def test_subgrad_robust_loss_examples(hkind, a, b, x, value, sub):
    v, g = subgrad_robust_loss(a, b, hkind, x)
    assert v == pytest.approx(value, abs=1e-15)
    np.testing.assert_allclose(g, sub, atol=1e-15)


def test_quintic_derivative_matches_finite_difference():
    h = 1e-5
    f = lambda z: abs(h_eval(z, "quintic")[0] - 1.0)  # noqa: E731
    assert (f(1 + h) - f(1 - h)) / (2 * h) == pytest.approx(8.0, rel=1e-8)


def test_subgrad_dimension_mismatch():
    with pytest.raises(ParameterError):
        subgrad_robust_loss((1.0, 0.0), 1.0, "quad", (1.0, 0.0, 0.0))


def test_exp_overflow_saturates():
    prob = RobustRegressionProblem(np.array([[1.0]]), np.array([0.0]), "exp")
    v = prob.value(np.array([1000.0]))
    assert np.isfinite(v)
    assert prob.saturated


def test_finite_diff_examples():
    np.testing.assert_allclose(finite_diff_gradient(lambda x: 0.5 * x @ x, [1.0, 2.0]), [1.0, 2.0], atol=1e-8)
    c = np.array([0.3, -2.0, 5.0])
    np.testing.assert_allclose(finite_diff_gradient(lambda x: c @ x, [4.0, 1.0, -7.0]), c, atol=1e-9)
    g = finite_diff_gradient(lambda z: huber(z[0], 1.0)[0], [2.0])
    assert g[0] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("hkind", ["quad"])
def test_weak_convexity_inequality(hkind):
    rng = np.random.default_rng(5)
    for _ in range(200):
        a = rng.normal(size=3)
        b = float(rng.normal())
        loss = RobustLoss(a, b, hkind)
        assert loss.rho == pytest.approx(2 * a @ a)
        x, y = (rng.uniform(-1, 1, size=3) * 10 / np.sqrt(3) for _ in range(2))
        lhs = loss.value(y)
        rhs = loss.value(x) + loss.subgrad(x) @ (y - x) - 0.5 * loss.rho * np.sum((y - x) ** 2)
        assert lhs >= rhs - 1e-9


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=0, max_value=2**63 - 1), st.tuples(st.integers(0, 100)))
def test_rng_stream_is_reproducible(seed, key):
    s = RNGStream(seed, key)
    a = s.generator().integers(0, 1000, size=20)
    b = RNGStream(seed, key).generator().integers(0, 1000, size=20)
    np.testing.assert_array_equal(a, b)


def test_rng_children_differ():
    s = RNGStream(3)
    a = s.child(0).generator().random(5)
    b = s.child(1).generator().random(5)
    assert not np.array_equal(a, b)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40))
def test_pairwise_sum_is_close_to_sum(vals):
    assert pairwise_sum(np.array(vals)) == pytest.approx(sum(vals), abs=1e-6)


def test_pairwise_sum_order_independent_of_row_construction():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(37, 3))
    np.testing.assert_array_equal(pairwise_sum(X), pairwise_sum(X.copy(order="F")))


def test_finite_sum_problem_matches_vectorized():
    rng = np.random.default_rng(2)
    A, b = rng.normal(size=(6, 3)), rng.normal(size=6)
    vec = RobustRegressionProblem(A, b, "quad")
    generic = FiniteSumProblem(vec.losses)
    x = rng.normal(size=3)
    assert vec.value(x) == pytest.approx(generic.value(x), rel=1e-14)
    np.testing.assert_allclose(vec.subgrad(x), generic.subgrad(x), rtol=1e-13)
    np.testing.assert_allclose(vec.sample_rho, 2 * (A**2).sum(axis=1))


def test_finite_sum_problem_rejects_mismatched_dims():
    with pytest.raises(ParameterError):
        FiniteSumProblem([AbsLoss(1), AbsLoss(2)])


def test_robust_rho_quintic_uses_radius():
    a = np.array([0.5, 0.0])
    assert robust_rho(a, "quintic", radius=2.0) == pytest.approx(0.25 * (20 * 1.0 + 6 * 1.0))
