"""Moreau-envelope smoothing and the prox solvers it relies on.

For a loss ``|F(y)|`` with ``F(y) = (a.y)^2 + q.y + c`` the prox is computed
through the concave dual ``tau(y) = min_x y F(x) + gamma/2 ||x - xbar||^2`` on
``y in [-1, 1]``; the primal argmin for a fixed dual value is a rank-one
linear solve. For other robust losses a damped prox-linear loop is used.
"""
from __future__ import annotations

import numpy as np

from ..core import AbsLoss, RobustLoss, RobustRegressionProblem, rowdot
from ..errors import CapabilityError, ConvergenceError, ParameterError
from .base import SAMeta, SmoothedObjective

_DUAL_CELLS = 64
_DUAL_TOL = 1e-12


def moreau_params(rho: float, eta: float):
    """Return ``(beta, rho_bar, L_eta)`` for Moreau smoothing at level ``eta``.

    ``beta = rho + max(1/eta, rho)``, ``rho_bar = 2 rho`` and ``L_eta = 2 rho + 1/eta``.
    """
    if not eta > 0:
        raise ParameterError("eta must be positive")
    if rho < 0:
        raise ParameterError("rho must be nonnegative")
    beta = rho + max(1.0 / eta, rho)
    return beta, 2.0 * rho, 2.0 * rho + 1.0 / eta


def moreau_error_bound(rho: float, eta: float, subgrad_norm) -> float:
    """Point-dependent gap ``f - f^beta <= eta / max(1, rho eta) * ||v||^2``."""
    return eta / max(1.0, rho * eta) * np.asarray(subgrad_norm) ** 2


def _dual_argmax(dtau, n: int) -> np.ndarray:
    """Maximize ``n`` concave functions on ``[-1, 1]`` given their derivatives.

    ``dtau(y)`` maps a ``(n, k)`` array of dual points to derivatives of the
    same shape. A bracketing grid locates the sign change, bisection refines it.
    """
    grid = np.linspace(-1.0, 1.0, _DUAL_CELLS + 1)
    vals = dtau(np.broadcast_to(grid, (n, grid.size)))
    y = np.empty(n)
    at_left = vals[:, 0] <= 0.0
    at_right = (~at_left) & (vals[:, -1] >= 0.0)
    y[at_left] = -1.0
    y[at_right] = 1.0
    inner = ~(at_left | at_right)
    if inner.any():
        # first cell whose right end is nonpositive; derivative is decreasing
        j = np.argmax(vals[inner] <= 0.0, axis=1)
        lo, hi = grid[j - 1].copy(), grid[j].copy()
        sel = np.flatnonzero(inner)
        while np.max(hi - lo) > _DUAL_TOL:
            mid = 0.5 * (lo + hi)
            full = np.zeros((n, 1))
            full[sel, 0] = mid
            dm = dtau(full)[sel, 0]
            pos = dm > 0.0
            lo = np.where(pos, mid, lo)
            hi = np.where(pos, hi, mid)
        y[sel] = 0.5 * (lo + hi)
    return y


def prox_abs_quadratic(a, q, c: float, xbar, gamma: float):
    """Prox of ``|(a.y)^2 + q.y + c|`` at ``xbar`` with weight ``gamma``.

    Minimizes ``|F(y)| + gamma/2 ||y - xbar||^2`` where the quadratic part of
    ``F`` is ``0.5 y'Qy`` with ``Q = 2 a a'``. Requires ``gamma > 2||a||^2``.

    Returns
    -------
    prox_point : ndarray
    envelope_value : float
        Minimal objective value.
    dual_y : float
        Maximizer of the dual on ``[-1, 1]``.
    """
    a = np.asarray(a, dtype=float)
    q = np.zeros_like(a) if q is None else np.asarray(q, dtype=float)
    xbar = np.asarray(xbar, dtype=float)
    s = float(a @ a)
    if not gamma > 2.0 * s:
        raise ParameterError(f"gamma={gamma} must exceed lambda_max(Q)={2.0 * s}")

    def primal(y):
        # (gamma I + 2 y a a')^{-1} (gamma xbar - y q) by Sherman-Morrison
        y = np.asarray(y, dtype=float)[..., None]
        w = gamma * xbar - y * q
        coef = 2.0 * y / (gamma + 2.0 * y * s)
        return (w - coef * (w @ a)[..., None] * a) / gamma

    def F(x):
        ax = x @ a
        return ax * ax + x @ q + c

    y_star = float(_dual_argmax(lambda Y: F(primal(Y)), 1)[0])
    x_star = primal(y_star)
    value = abs(float(F(x_star))) + 0.5 * gamma * float(np.sum((x_star - xbar) ** 2))
    return x_star, value, y_star


def prox_abs_quadratic_rows(A, b, xbar, gamma):
    """Batched prox of ``|(a_i.y)^2 - b_i|`` at a common ``xbar``.

    ``gamma`` may be a scalar or one weight per row. The prox lies on the line
    ``xbar + t_i a_i``; the coefficients ``t_i`` and the dual values are returned.
    """
    A = np.asarray(A, dtype=float)
    s = (A * A).sum(axis=1)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), s.shape)
    if np.any(gamma <= 2.0 * s):
        raise ParameterError("gamma must exceed 2||a_i||^2 for every row")
    u0 = rowdot(A, xbar)
    b = np.asarray(b, dtype=float)
    g, ss, uu, bb = gamma[:, None], s[:, None], u0[:, None], b[:, None]

    def dtau(Y):
        u = uu * g / (g + 2.0 * Y * ss)
        return u * u - bb

    y = _dual_argmax(dtau, s.size)
    t = -2.0 * y * u0 / (gamma + 2.0 * y * s)
    return t, y


def prox_linear(residual, xbar, gamma: float, curvature: float = 0.0,
                tol: float = 1e-10, max_iter: int = 200, x0=None):
    """Prox of ``|F|`` at ``xbar`` by damped prox-linear steps.

    Each step minimizes ``|F(x_k) + <grad F(x_k), x - x_k>| + gamma/2 ||x - xbar||^2
    + curvature/2 ||x - x_k||^2`` in closed form. ``residual(x)`` returns
    ``(F(x), grad F(x))``; ``curvature`` should bound the curvature of ``F``
    (zero for affine ``F``, in which case one step is exact).
    """
    xbar = np.asarray(xbar, dtype=float)
    x = xbar.copy() if x0 is None else np.asarray(x0, dtype=float).copy()
    big = gamma + curvature
    for it in range(1, max_iter + 1):
        Fx, g = residual(x)
        center = (gamma * xbar + curvature * x) / big
        u = Fx + float(g @ (center - x))
        g2 = float(g @ g)
        if g2 == 0.0:
            x_new = center
        elif abs(u) <= g2 / big:
            x_new = center - (u / g2) * g
        else:
            x_new = center - (np.sign(u) / big) * g
        step = float(np.linalg.norm(x_new - x))
        x = x_new
        if step <= tol:
            return x
    raise ConvergenceError(f"prox_linear did not reach tol={tol} in {max_iter} iterations",
                           last=x, info={"last_step": step})


def loss_prox(f, x, beta: float) -> np.ndarray:
    """``argmin_y f(y) + beta/2 ||y - x||^2`` for the supported loss types."""
    if hasattr(f, "prox"):
        return f.prox(x, beta)
    if isinstance(f, RobustLoss):
        if f.hkind == "quad":
            return prox_abs_quadratic(f.a, None, -f.b, x, beta)[0]
        return prox_linear(f.residual, x, beta, curvature=f.rho)
    raise CapabilityError(f"no prox oracle for {type(f).__name__}")


def moreau_envelope(f, beta: float, x):
    """Moreau envelope ``min_y f(y) + beta/2 ||y - x||^2``.

    Returns
    -------
    value : float
    gradient : ndarray
        ``beta (x - prox)``, which lies in the subdifferential of ``f`` at the prox.
    prox_point : ndarray
    """
    if not beta > getattr(f, "rho", 0.0):
        raise ParameterError(f"beta={beta} must exceed the loss modulus {f.rho}")
    x = np.asarray(x, dtype=float)
    y = loss_prox(f, x, beta)
    value = f.value(y) + 0.5 * beta * float(np.sum((y - x) ** 2))
    return value, beta * (x - y), y


class MoreauRobust(SmoothedObjective):
    """Moreau smoothing of each sample of a robust regression.

    Sample ``i`` uses ``beta_i = rho_i + max(1/eta, rho_i)``. The finite sum has
    ``rho_bar = mean(2 rho_i)`` and the constant smoothness ``mean(2 rho_i) + 1/eta``.
    The error descriptor uses the norm of the chosen subgradient at ``x``.
    """

    def __init__(self, problem: RobustRegressionProblem, eta: float):
        if not eta > 0:
            raise ParameterError("eta must be positive")
        self.problem = problem
        self.eta = float(eta)
        self.n_samples, self.dim = problem.n_samples, problem.dim
        rho = problem.sample_rho
        self.beta = rho + np.maximum(1.0 / self.eta, rho)
        self._err_scale = self.eta / np.maximum(1.0, rho * self.eta)
        B = float(np.mean(2.0 * rho))
        self.meta = SAMeta(
            rho_bar=B,
            eta=self.eta,
            R_eta=self._R_eta,
            L_eta=B + 1.0 / self.eta,
            B=B,
            L_coef=1.0,
        )

    def _R_eta(self, x):
        _, sub = self.problem.sample_values_subgrads(np.asarray(x, dtype=float), self.all_indices)
        return float(np.mean(self._err_scale * (sub * sub).sum(axis=1)))

    def prox_points(self, x, idx):
        idx = np.asarray(idx)
        A = self.problem.A[idx]
        if self.problem.hkind == "quad":
            t, _ = prox_abs_quadratic_rows(A, self.problem.b[idx], x, self.beta[idx])
            return x + t[:, None] * A
        losses = self.problem.losses
        return np.array([
            prox_linear(losses[i].residual, x, self.beta[i], curvature=losses[i].rho) for i in idx
        ])

    def sample_values_grads(self, x, idx):
        idx = np.asarray(idx)
        Y = self.prox_points(x, idx)
        vals = np.abs(self.problem.residuals_at_rows(Y, idx))
        diff = x - Y
        beta = self.beta[idx]
        vals = vals + 0.5 * beta * (diff * diff).sum(axis=1)
        return vals, beta[:, None] * diff

    def with_eta(self, eta):
        return MoreauRobust(self.problem, eta)


class MoreauAbs(SmoothedObjective):
    """Moreau envelope of ``||x||_1`` at level ``beta = 1/eta`` (equals Huber)."""

    def __init__(self, dim: int = 1, eta: float = 1.0):
        self.dim, self.eta = int(dim), float(eta)
        self.loss = AbsLoss(self.dim)
        self.beta = 1.0 / self.eta
        self.meta = SAMeta(0.0, self.eta, 0.5 * self.eta * self.dim, 1.0 / self.eta,
                           R_coef=0.5 * self.dim, B=0.0, L_coef=1.0)

    def sample_values_grads(self, x, idx):
        v, g, _ = moreau_envelope(self.loss, self.beta, x)
        n = len(idx)
        return np.full(n, v), np.tile(g, (n, 1))

    def true_value(self, x):
        return self.loss.value(x)

    def with_eta(self, eta):
        return MoreauAbs(self.dim, eta)
