"""Accelerated gradient with line search for ``min g(x) + pi(x)``.

``g`` is convex with a locally Lipschitz gradient and ``pi`` is
``mu``-strongly convex with an easy prox. Each iteration forms the
extrapolated point ``x_t``, a prox step ``z_t`` and the average ``y_t``; the
local smoothness estimate ``Lhat_t`` starts from ``tau_d * Lhat_{t-1}`` and is
multiplied by ``tau_u`` until the sufficient-decrease test holds at ``y_t``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..core import Regularizer, Zero
from ..errors import ConvergenceError, ParameterError, SmoothnessBlowup

LS_CAP = 128
_EPS = np.finfo(float).eps


@dataclass
class ProxQuadratic:
    """``pi(x) = r(x) + mu/2 ||x - center||^2``."""

    reg: Regularizer
    mu: float
    center: np.ndarray

    def value(self, x) -> float:
        d = x - self.center
        return self.reg.value(x) + 0.5 * self.mu * float(d @ d)

    def step(self, grad, anchor, gamma: float):
        """``argmin <grad, x> + pi(x) + gamma/2 ||x - anchor||^2``."""
        w = self.mu + gamma
        if not w > 0:
            raise ParameterError("prox step needs mu + gamma > 0")
        return self.reg.prox((self.mu * self.center + gamma * anchor - grad) / w, 1.0 / w)


@dataclass
class AGLSStats:
    iterations: int = 0
    grad_evals: int = 0
    value_evals: int = 0
    ls_steps: int = 0
    reason: str = ""
    L0: float = float("nan")
    Lhat: list = field(default_factory=list)
    alpha: list = field(default_factory=list)
    trials: list = field(default_factory=list)
    contraction: list = field(default_factory=list)
    xs: list = field(default_factory=list)
    ys: list = field(default_factory=list)
    zs: list = field(default_factory=list)

    @property
    def calls(self) -> int:
        """Total evaluations of ``g`` (each returns a gradient)."""
        return self.grad_evals + self.value_evals

    @property
    def product(self) -> float:
        return float(np.prod(self.contraction)) if self.contraction else 1.0


def _first_alpha(L, mu):
    return 1.0 if mu == 0 else float(np.sqrt(mu / (L + mu)))


def _next_alpha(L, mu, b_prev):
    # positive root of (L + mu) a^2 + (b - mu) a - b = 0
    A, Bc = L + mu, b_prev - mu
    return float((-Bc + np.sqrt(Bc * Bc + 4.0 * A * b_prev)) / (2.0 * A))


def agls(g: Callable, pi, x0, mu: float = 0.0, L0: float = 1.0, tau_d: float = 0.5, tau_u: float = 2.0,
         T: int = 1000, early_stop: bool = False, grad_tol: float | None = None,
         fixed_L: float | None = None, record: bool = False, ls_cap: int = LS_CAP,
         on_iter: Callable | None = None):
    """Run the accelerated scheme and return ``(y_T, stats)``.

    Parameters
    ----------
    g : callable
        ``g(x) -> (value, gradient)``.
    pi : ProxQuadratic or object with ``step(grad, anchor, gamma)``
    mu : float
        Strong-convexity modulus of ``pi``.
    early_stop : bool
        Return once ``prod_t (1 - sqrt(mu / (Lhat_t + mu))) <= 1/4``.
    grad_tol : float, optional
        Stop once the prox-gradient mapping at ``y_t`` (step ``1/Lhat_t``) has
        norm at most ``grad_tol``; costs one extra gradient per iteration.
    fixed_L : float, optional
        Use this constant instead of the line search (no descent test).
    on_iter : callable, optional
        ``on_iter(t, y, stats)``; returning True stops the loop.
    """
    if mu < 0:
        raise ParameterError("mu must be nonnegative")
    if not (0 < tau_d < 1 and tau_u > 1):
        raise ParameterError("need 0 < tau_d < 1 < tau_u")
    if fixed_L is None and not L0 > 0:
        raise ParameterError("L0 must be positive")
    if fixed_L is not None and fixed_L < 0:
        raise ParameterError("fixed_L must be nonnegative")

    x0 = np.asarray(x0, dtype=float)
    y, z = x0.copy(), x0.copy()
    stats = AGLSStats(L0=float(L0 if fixed_L is None else fixed_L))
    L_prev = float(L0) if fixed_L is None else float(fixed_L)
    b_prev = None
    gy = None
    if record:
        stats.xs.append(x0.copy()), stats.ys.append(y.copy()), stats.zs.append(z.copy())

    for t in range(1, T + 1):
        L_trial = L_prev if fixed_L is not None else tau_d * L_prev
        k = 0
        while True:
            alpha = _first_alpha(L_trial, mu) if b_prev is None else _next_alpha(L_trial, mu, b_prev)
            gamma = (L_trial + mu) * alpha - mu
            beta = gamma / (L_trial * alpha) if L_trial * alpha > 0 else 1.0
            ab = alpha * beta
            x = (1.0 - ab) * y + ab * z
            gx_val, gx = g(x)
            stats.grad_evals += 1
            z_new = pi.step(gx, z, max(gamma, 0.0))
            y_new = (1.0 - alpha) * y + alpha * z_new
            if fixed_L is not None:
                break
            gy_val, gy = g(y_new)
            stats.value_evals += 1
            d = y_new - x
            quad = 0.5 * L_trial * float(d @ d)
            slack = 10.0 * _EPS * max(abs(gx_val), abs(gy_val), 1.0)
            if quad > slack:
                ok = gy_val <= gx_val + float(gx @ d) + quad + slack
            else:
                # value differences are at rounding level; convexity gives
                # g(y) - g(x) - <gx, d> <= <gy - gx, d> without cancellation
                ok = float((gy - gx) @ d) <= quad
            if ok:
                break
            k += 1
            if k > ls_cap:
                raise SmoothnessBlowup(
                    f"line search exceeded {ls_cap} doublings at iteration {t}",
                    last=y, info={"iteration": t, "Lhat": L_trial, "stats": stats},
                )
            L_trial *= tau_u
        stats.ls_steps += k + 1
        stats.trials.append(k + 1)
        y, z = y_new, z_new
        L_prev = L_trial
        b_prev = alpha * alpha * (L_trial + mu)
        stats.iterations = t
        stats.Lhat.append(L_trial)
        stats.alpha.append(alpha)
        stats.contraction.append(1.0 - _first_alpha(L_trial, mu) if mu > 0 else 1.0)
        if record:
            stats.xs.append(x.copy()), stats.ys.append(y.copy()), stats.zs.append(z.copy())
        if not np.all(np.isfinite(y)):
            raise ConvergenceError("non-finite iterate", last=y, info={"iteration": t})

        if early_stop and mu > 0 and stats.product <= 0.25:
            stats.reason = "early_stop"
            return y, stats
        if grad_tol is not None:
            if fixed_L is not None or gy is None:
                _, gy = g(y)
                stats.grad_evals += 1
            step_L = max(L_trial, _EPS)
            y_plus = pi.step(gy, y, step_L)
            if step_L * float(np.linalg.norm(y - y_plus)) <= grad_tol:
                stats.reason = "grad_tol"
                return y, stats
        if on_iter is not None and on_iter(t, y, stats):
            stats.reason = "callback"
            return y, stats

    stats.reason = "max_iter"
    return y, stats


def unconstrained(mu: float = 0.0, center=None, dim: int | None = None) -> ProxQuadratic:
    """``pi = mu/2 ||x - center||^2`` with no regularizer."""
    c = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    return ProxQuadratic(Zero(), mu, c)


def agls_minimize(smoothed, reg: Regularizer, config, x0, f_stop=None):
    """Line-search AGLS on a convex smoothed objective, logged as a :class:`Trace`.

    Every evaluation of the smoothed objective costs ``n_samples`` oracle calls.
    """
    from ..errors import CapabilityError
    from .common import BudgetExhausted, GuardedOracle, Monitor

    if not smoothed.convex:
        raise CapabilityError("agls needs a convex smoothed objective; use agls-sipp")
    n = smoothed.n_samples
    mon = Monitor(smoothed, reg, config, f_stop)
    x = np.asarray(x0, dtype=float).copy()
    mon.start(x, step=1.0 / config.L0)
    oracle = GuardedOracle(smoothed.value_grad, n, mon.budget_left())
    state = {"calls": 0, "reason": None}

    def on_iter(t, y, stats):
        used = oracle.calls - state["calls"]
        state["calls"] = oracle.calls
        L = stats.Lhat[-1]
        reason = mon.record(t, y, used * n, step=1.0 / L, Lhat=L, ls_steps=stats.trials[-1])
        state["reason"] = reason
        return reason is not None

    # K caps the iterations; the oracle guard enforces the budget
    T = config.K if config.K is not None else config.budget // n
    try:
        agls(oracle, ProxQuadratic(reg, 0.0, x), x, mu=0.0, L0=config.L0,
             tau_d=config.tau_d, tau_u=config.tau_u, T=max(T, 1), on_iter=on_iter)
    except BudgetExhausted:
        return mon.stop("budget")
    except ConvergenceError:
        return mon.stop("diverged")
    return mon.stop(state["reason"] or "max_iter")
