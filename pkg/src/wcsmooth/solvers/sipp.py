"""Inexact proximal point on the smoothed problem.

Outer step ``k`` approximately minimizes
``psi_k(x) = phi_eta(x) + rho_hat/2 ||x - x_{k-1}||^2``, which is
``(rho_hat - rho_bar)``-strongly convex. The inner solver is either the
accelerated scheme with a fixed smoothness constant and (minibatch) gradients,
or the line-search version with its early-stop rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..core import Regularizer, RNGStream
from ..errors import ConvergenceError, ParameterError
from ..smoothing.base import SmoothedObjective
from .agls import AGLSStats, ProxQuadratic, agls
from .common import BudgetExhausted, GuardedOracle, Monitor
from .config import SolverConfig


@dataclass
class ProximalSubproblem:
    """``psi(x) = f_eta(x) + r(x) + weight/2 ||x - center||^2``.

    For a strong-convexity split ``mu`` the smooth part is
    ``f_eta + (weight - mu)/2 ||x - center||^2`` (convex when ``weight - mu >= rho_bar``)
    and the prox part is ``r + mu/2 ||x - center||^2``.
    """

    objective: SmoothedObjective
    reg: Regularizer
    center: np.ndarray
    weight: float

    def value(self, x) -> float:
        d = x - self.center
        return self.objective.value(x) + self.reg.value(x) + 0.5 * self.weight * float(d @ d)

    def smooth_part(self, mu: float, idx_fn=None):
        w = self.weight - mu
        obj, c = self.objective, self.center

        def g(x):
            if idx_fn is None:
                v, grad = obj.value_grad(x)
            else:
                v, grad = obj.batch_value_grad(x, idx_fn())
            d = x - c
            return v + 0.5 * w * float(d @ d), grad + w * d

        return g

    def prox_part(self, mu: float) -> ProxQuadratic:
        return ProxQuadratic(self.reg, mu, self.center)


def asgd_T_k(B: float, L: float, eta: float, rho_bar: float, rho_hat: float,
             sigma: float = 0.0, eps: float | None = None) -> int:
    """Inner iteration count ``ceil(max(2 sqrt(2(B + L/eta + 2 rho_bar)/rho_bar),
    8 sigma^2 / ((rho_hat - rho_bar) eps^2)))``; ``eps`` defaults to ``sqrt(eta)``."""
    if not rho_bar > 0:
        raise ParameterError("rho_bar must be positive")
    if not rho_hat > rho_bar:
        raise ParameterError("rho_hat must exceed rho_bar")
    eps = math.sqrt(eta) if eps is None else eps
    det = 2.0 * math.sqrt(2.0 * (B + L / eta + 2.0 * rho_bar) / rho_bar)
    sto = 8.0 * sigma**2 / ((rho_hat - rho_bar) * eps**2) if sigma > 0 else 0.0
    v = max(det, sto)
    # guard against values that are integers up to rounding
    return max(1, math.ceil(v - 1e-9 * max(1.0, v)))


def asgd_inner(sub: ProximalSubproblem, mu: float, L: float, T: int, batch: int | None = None,
               rng: np.random.Generator | None = None, x0=None, grad_tol: float | None = None):
    """``T`` accelerated steps on a proximal subproblem with a fixed constant.

    ``L`` is the smoothness of ``f_eta + weight/2 ||. - center||^2`` and ``mu``
    its strong-convexity modulus; the kernel treats ``g = psi - mu/2 ||. - c||^2``
    with fixed estimate ``L - mu``. Returns ``(y_T, stats)``.
    """
    if not mu > 0:
        raise ParameterError("mu must be positive")
    if L < mu:
        raise ParameterError("L must be at least mu")
    n = sub.objective.n_samples
    if batch is None:
        idx_fn = None
    else:
        if rng is None:
            raise ParameterError("stochastic mode needs an rng")
        idx_fn = lambda: rng.integers(0, n, size=batch)  # noqa: E731
    x0 = sub.center if x0 is None else x0
    return agls(sub.smooth_part(mu, idx_fn), sub.prox_part(mu), x0, mu=mu,
                fixed_L=L - mu, T=T, grad_tol=grad_tol)


def adapt_subproblem_heuristics(gamma: float, eta: float, inner_iters: int, k: int, eps2: float,
                                trigger: int = 6, decay: float = 0.5, floor: float = 10.0,
                                eta_decay: bool = True):
    """Decay rules applied after an expensive subproblem.

    When more than ``trigger`` inner iterations were used the proximal weight
    becomes ``max(decay * gamma, floor)`` and (optionally) ``eta = eps2 / k``.
    """
    if inner_iters <= trigger:
        return gamma, eta
    new_eta = eps2 / max(k, 1) if eta_decay else eta
    return max(decay * gamma, floor), new_eta


def _default_rho_hat(rho_bar, cfg):
    if cfg.rho_hat is not None:
        return cfg.rho_hat
    return 2.0 * rho_bar if rho_bar > 0 else 1.0


def sipp(smoothed: SmoothedObjective, reg: Regularizer, config: SolverConfig, x0,
         inner: str = "asgd", f_stop: float | None = None):
    """Smoothed inexact proximal point; returns a :class:`Trace`.

    ``inner="asgd"`` runs ``T_k`` accelerated steps with the constant
    ``L_eta + rho_hat`` (needs constant-form metadata); ``inner="agls"`` uses
    the line search and stops each subproblem by the early-stop rule.
    With ``config.experiment_mode`` the subproblem heuristics apply instead.
    """
    if inner not in ("asgd", "agls"):
        raise ParameterError(f"unknown inner solver {inner!r}")
    if config.experiment_mode:
        return _sipp_experiment(smoothed, reg, config, x0, inner, f_stop)
    meta = smoothed.meta
    # a convex smoothed objective needs no curvature correction whatever meta.rho_bar says
    rho_bar = 0.0 if smoothed.convex else meta.rho_bar
    rho_hat = _default_rho_hat(rho_bar, config)
    if not rho_hat > rho_bar:
        raise ParameterError(f"rho_hat={rho_hat} must exceed rho_bar={rho_bar}")
    mu = rho_hat - rho_bar
    n = smoothed.n_samples
    rng = RNGStream(config.seed).generator()
    mon = Monitor(smoothed, reg, config, f_stop)
    x = np.asarray(x0, dtype=float).copy()
    if inner == "asgd":
        L_eta = meta.require_constant_L()
        L = L_eta + rho_hat
        if meta.B is not None and meta.L_coef is not None and rho_bar > 0:
            T_k = asgd_T_k(meta.B, meta.L_coef, meta.eta, rho_bar, rho_hat, config.sigma, config.eps)
        else:
            # 4 L / (mu T^2) <= lam
            T_k = max(1, math.ceil(math.sqrt(4.0 * L / (mu * config.inner.lam))))
        per_grad = n if config.batch is None else config.batch
        cost = T_k * per_grad
    else:
        cost = None
    mon.start(x, step=1.0 / (rho_hat + max(meta.L_at(x, x), 0.0)))
    L_est = config.L0
    k = 0
    while True:
        k += 1
        sub = ProximalSubproblem(smoothed, reg, x.copy(), rho_hat)
        if inner == "asgd":
            if mon.budget_left() < cost:
                return mon.stop("budget")
            y, stats = asgd_inner(sub, mu, L, T_k, config.batch, rng)
            used = stats.calls * per_grad
            Lhat, ls = L, 0
        else:
            if mon.budget_left() < 2 * n:
                return mon.stop("budget")
            oracle = GuardedOracle(sub.smooth_part(mu), n, mon.budget_left())
            try:
                y, stats = agls(oracle, sub.prox_part(mu), x, mu=mu, L0=L_est, tau_d=config.tau_d,
                                tau_u=config.tau_u, T=config.max_inner_T, early_stop=True,
                                on_iter=oracle.on_iter)
            except BudgetExhausted:
                return _stop_exhausted(mon, k, x, oracle, n, rho_hat)
            used = oracle.calls * n
            L_est = stats.Lhat[-1]
            Lhat, ls = L_est, stats.ls_steps
        surrogate = rho_hat * float(np.linalg.norm(y - x))
        x = y
        reason = mon.record(k, x, used, step=1.0 / (rho_hat + Lhat), Lhat=Lhat, ls_steps=ls,
                            surrogate=surrogate)
        if reason:
            return mon.stop(reason)
        if surrogate == 0.0:
            return mon.stop("stationary")


def _stop_exhausted(mon, k, x, oracle, n, weight, objective=None):
    """Log the last accepted inner iterate (if any) and stop with reason ``budget``."""
    if oracle.calls == 0:
        return mon.stop("budget")
    y = oracle.last if oracle.last is not None else x
    surrogate = weight * float(np.linalg.norm(y - x))
    mon.record(k, y, oracle.calls * n, step=1.0 / weight, surrogate=surrogate, objective=objective,
               force=True)
    return mon.stop("budget")


def _sipp_experiment(smoothed, reg, config, x0, inner, f_stop):
    """Proximal point with the subproblem heuristics of the benchmark setup.

    The proximal weight starts at ``gamma_0 = sqrt(K) / alpha0`` where ``K`` is
    the number of full-gradient evaluations in the budget. Each subproblem is
    solved by at most ``max_inner`` accelerated iterations, stopping early at
    the gradient-mapping tolerance; slow subproblems trigger the decay rules.
    The ASGD inner solver takes fixed steps ``alpha0 / sqrt(K)`` (smoothness
    estimate ``gamma_0``), the AGLS inner solver backtracks.
    """
    h = config.heuristics
    n = smoothed.n_samples
    K_full = config.iterations(n)
    gamma = gamma0 = math.sqrt(max(K_full, 1)) / config.alpha0
    eta0 = smoothed.eta
    obj = smoothed
    mon = Monitor(smoothed, reg, config, f_stop)
    x = np.asarray(x0, dtype=float).copy()
    mon.start(x, step=1.0 / gamma)
    L_est = config.L0
    k = 0
    while True:
        k += 1
        if mon.budget_left() < 2 * n:
            return mon.stop("budget")
        sub = ProximalSubproblem(obj, reg, x.copy(), gamma)
        # the smoothed loss need not be convex at this weight; treat it as such
        mu = gamma
        oracle = GuardedOracle(sub.smooth_part(mu), n, mon.budget_left())
        try:
            if inner == "asgd":
                y, stats = agls(oracle, sub.prox_part(mu), x, mu=mu, fixed_L=gamma0,
                                T=h.max_inner, grad_tol=h.grad_tol, on_iter=oracle.on_iter)
                Lhat, ls = gamma0, 0
            else:
                y, stats = agls(oracle, sub.prox_part(mu), x, mu=mu, L0=L_est,
                                tau_d=config.tau_d, tau_u=config.tau_u, T=h.max_inner,
                                grad_tol=h.grad_tol, on_iter=oracle.on_iter)
                L_est = stats.Lhat[-1]
                Lhat, ls = L_est, stats.ls_steps
        except BudgetExhausted:
            return _stop_exhausted(mon, k, x, oracle, n, gamma, objective=obj)
        except ConvergenceError:
            mon.record_failure(k)
            return mon.stop("diverged")
        used = oracle.calls * n
        surrogate = gamma * float(np.linalg.norm(y - x))
        x = y
        reason = mon.record(k, x, used, step=1.0 / gamma, Lhat=Lhat, ls_steps=ls, surrogate=surrogate,
                            objective=obj)
        if reason:
            return mon.stop(reason)
        new_gamma, new_eta = adapt_subproblem_heuristics(
            gamma, obj.eta, stats.iterations, k, eta0, h.trigger, h.gamma_decay, h.gamma_floor, h.eta_decay)
        if new_eta != obj.eta:
            obj = obj.with_eta(new_eta)
        gamma = new_gamma


def agls_sipp(smoothed: SmoothedObjective, reg: Regularizer, config: SolverConfig, x0,
              f_stop: float | None = None):
    return sipp(smoothed, reg, config, x0, inner="agls", f_stop=f_stop)
