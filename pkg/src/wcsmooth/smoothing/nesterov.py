"""Dual (Nesterov) smoothing: Huber for ``|.|`` and softmax for ``max_j``."""
from __future__ import annotations

from typing import Callable

import numpy as np

from ..core import MaxQuadraticProblem, RobustRegressionProblem, h_eval, rowdot
from ..errors import ParameterError
from .base import SAMeta, SmoothedObjective

_THETA_GRID = np.linspace(0.0, 1.0, 11)


def huber(z, eta: float):
    """Huber function and its derivative, elementwise.

    ``z^2 / (2 eta)`` on ``|z| <= eta`` and ``|z| - eta / 2`` outside.
    """
    if not eta > 0:
        raise ParameterError("eta must be positive")
    z = np.asarray(z, dtype=float)
    inside = np.abs(z) <= eta
    value = np.where(inside, z * z / (2.0 * eta), np.abs(z) - 0.5 * eta)
    deriv = np.where(inside, z / eta, np.sign(z))
    if value.ndim == 0:
        return float(value), float(deriv)
    return value, deriv


def softmax_smooth(values, grads, eta: float):
    """``eta * log sum_j exp(f_j / eta)`` with its gradient and simplex weights.

    Uses the max-shift so large ``f_j / eta`` never overflow.
    """
    if not eta > 0:
        raise ParameterError("eta must be positive")
    values = np.asarray(values, dtype=float)
    grads = np.asarray(grads, dtype=float).reshape(values.size, -1)
    top = values.max()
    expv = np.exp((values - top) / eta)
    total = expv.sum()
    weights = expv / total
    value = top + eta * np.log(total)
    return float(value), weights @ grads, weights


def _segment_sup(point_fn: Callable, x, y) -> float:
    """``max`` of ``point_fn`` over an 11-point grid on the segment [y, x]."""
    return max(point_fn(t * x + (1.0 - t) * y) for t in _THETA_GRID)


def softmax_meta(smooth_constants, eta: float, grad_fn: Callable | None = None) -> SAMeta:
    """Metadata for the softmax smoothing of ``max_j f_j`` with ``L_j``-smooth pieces.

    ``grad_fn(x)`` returns the stacked piece gradients ``(m, d)``; it is needed
    for the point-dependent smoothness descriptor. The supremum over the
    segment is approximated on a grid, so the result is reporting-only.
    """
    L = np.asarray(smooth_constants, dtype=float)
    if np.any(L < 0):
        raise ParameterError("smoothness constants must be nonnegative")
    rho_bar = float(L.max())
    log_m = float(np.log(L.size))

    if grad_fn is None:
        L_eta = float("nan")
    else:
        def L_eta(x, y):
            def sq(z):
                return float((grad_fn(z) ** 2).sum(axis=1).max())

            return rho_bar + _segment_sup(sq, np.asarray(x), np.asarray(y)) / eta

    return SAMeta(rho_bar=rho_bar, eta=eta, R_eta=eta * log_m, L_eta=L_eta, R_coef=log_m)


class HuberRobust(SmoothedObjective):
    """Huber smoothing of each ``|h(<a_i, x>) - b_i|`` in a robust regression.

    Per sample the metadata is ``rho_i`` (the loss modulus), ``R = eta / 2``
    and ``L(x, y) = rho_i + ||a_i||^2 max(h'(<a_i,x>)^2, h'(<a_i,y>)^2) / eta``;
    ``h'`` is monotone in ``|z|`` or in ``z`` for all supported kinds, so the
    segment supremum sits at an endpoint. The finite sum averages these.
    """

    def __init__(self, problem: RobustRegressionProblem, eta: float):
        if not eta > 0:
            raise ParameterError("eta must be positive")
        self.problem = problem
        self.eta = float(eta)
        self.n_samples, self.dim = problem.n_samples, problem.dim
        self._row_sq = (problem.A**2).sum(axis=1)
        rho = problem.sample_rho
        self.meta = SAMeta(
            rho_bar=float(np.mean(rho)),
            eta=self.eta,
            R_eta=0.5 * self.eta,
            L_eta=self._L_eta,
            R_coef=0.5,
        )

    def _L_eta(self, x, y):
        A = self.problem.A
        _, dx, _, _ = h_eval(rowdot(A, x), self.problem.hkind)
        _, dy, _, _ = h_eval(rowdot(A, y), self.problem.hkind)
        per = self.problem.sample_rho + self._row_sq * np.maximum(dx * dx, dy * dy) / self.eta
        return float(np.mean(per))

    def sample_values_grads(self, x, idx):
        resid, d1 = self.problem.residuals(x, idx)
        val, dval = huber(resid, self.eta)
        val, dval = np.atleast_1d(val), np.atleast_1d(dval)
        return val, (dval * d1)[:, None] * self.problem.A[idx]

    def with_eta(self, eta):
        return HuberRobust(self.problem, eta)


class HuberAbs(SmoothedObjective):
    """Huber smoothing of ``||x||_1`` (coordinatewise); convex with ``L = 1/eta``."""

    def __init__(self, dim: int = 1, eta: float = 1.0):
        self.dim, self.eta = int(dim), float(eta)
        self.meta = SAMeta(0.0, self.eta, 0.5 * self.eta * self.dim, 1.0 / self.eta,
                           R_coef=0.5 * self.dim, B=0.0, L_coef=1.0)

    def sample_values_grads(self, x, idx):
        val, dval = huber(np.asarray(x, dtype=float), self.eta)
        v = float(np.sum(val))
        n = len(idx)
        return np.full(n, v), np.tile(np.atleast_1d(dval), (n, 1))

    def true_value(self, x):
        return float(np.abs(x).sum())

    def with_eta(self, eta):
        return HuberAbs(self.dim, eta)


class SoftmaxMax(SmoothedObjective):
    """Softmax smoothing of ``max_j {0.5 <x, A_j x> - <b_j, x>}``.

    The value is shifted down by ``eta log m`` so that ``f_eta <= f <= f_eta + eta log m``.
    """

    def __init__(self, problem: MaxQuadraticProblem, eta: float):
        self.problem = problem
        self.eta = float(eta)
        self.dim = problem.dim
        self.n_samples = 1
        self._shift = self.eta * np.log(problem.n_pieces)
        self.meta = softmax_meta(problem.piece_smoothness, self.eta,
                                 grad_fn=lambda z: problem.piece_values_grads(z)[1])

    @property
    def convex(self) -> bool:
        # log-sum-exp of convex pieces is convex, whatever the generic rho_bar says
        return self.problem.sample_rho == 0

    def sample_values_grads(self, x, idx):
        vals, grads = self.problem.piece_values_grads(x)
        v, g, _ = softmax_smooth(vals, grads, self.eta)
        n = len(idx)
        return np.full(n, v - self._shift), np.tile(g, (n, 1))

    def with_eta(self, eta):
        return SoftmaxMax(self.problem, eta)


class DualSmoothed(SmoothedObjective):
    """Generic dual smoothing ``h_eta(F(x))`` from a user callback.

    ``inner(x)`` returns ``(F(x), J(x))`` with ``J`` the Jacobian ``(k, d)``;
    ``smoothed_outer(z, eta)`` returns ``(h_eta(z), y*)`` where ``y*`` is the
    dual maximizer, which is also ``grad h_eta(z)``. Metadata is supplied by
    the caller.
    """

    def __init__(self, inner: Callable, smoothed_outer: Callable, dim: int, eta: float,
                 meta: SAMeta, true_fn: Callable | None = None):
        self.inner, self.smoothed_outer = inner, smoothed_outer
        self.dim, self.eta, self.meta = int(dim), float(eta), meta
        self._true_fn = true_fn

    def sample_values_grads(self, x, idx):
        z, J = self.inner(x)
        v, y = self.smoothed_outer(np.atleast_1d(z), self.eta)
        g = np.atleast_2d(J).T @ np.atleast_1d(y)
        n = len(idx)
        return np.full(n, float(v)), np.tile(g, (n, 1))

    def true_value(self, x):
        if self._true_fn is None:
            return super().true_value(x)
        return float(self._true_fn(x))
