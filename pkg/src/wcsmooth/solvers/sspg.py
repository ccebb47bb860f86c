"""Smoothing stochastic proximal gradient: prox-gradient steps on ``f_eta + r``."""
from __future__ import annotations

import math

import numpy as np

from ..core import Regularizer, RNGStream
from ..errors import CapabilityError
from ..smoothing.base import SmoothedObjective
from .common import Monitor
from .config import SolverConfig


def sspg_stepsize(meta, K: int, batch: int | None, sigma: float = 0.0, rho_hat: float | None = None,
                  delta0: float | None = None) -> float:
    """Theory stepsize from constant-form metadata.

    Deterministic (``batch=None`` or ``sigma=0``): ``1 / (2 L_eta)``.
    Stochastic: ``1 / (c sqrt(K) + rho_hat + L_eta)`` with
    ``c = sigma sqrt(rho_hat / ((delta0 + R eta) batch))``.
    """
    L = meta.require_constant_L()
    if batch is None or sigma == 0:
        return 1.0 / (2.0 * L)
    if meta.R_coef is None:
        raise CapabilityError("stochastic stepsize needs a constant error descriptor R * eta")
    if delta0 is None:
        raise CapabilityError("stochastic stepsize needs the initial gap bound delta0")
    rho_hat = 2.0 * meta.rho_bar if rho_hat is None else rho_hat
    c = sigma * math.sqrt(rho_hat / ((delta0 + meta.R_coef * meta.eta) * batch))
    return 1.0 / (c * math.sqrt(K) + rho_hat + L)


def sspg(smoothed: SmoothedObjective, reg: Regularizer, config: SolverConfig, x0, f_stop=None):
    """``x_k = prox_{gamma r}(x_{k-1} - gamma g_{k-1})`` with minibatch gradients ``g``."""
    n = smoothed.n_samples
    cost = n if config.batch is None else config.batch
    K = config.iterations(cost)
    if config.schedule == "theory":
        gamma = sspg_stepsize(smoothed.meta, K, config.batch, config.sigma, config.rho_hat, config.delta0)
    else:
        gamma = config.stepsize(cost)
    rng = RNGStream(config.seed).generator()
    mon = Monitor(smoothed, reg, config, f_stop)
    x = np.asarray(x0, dtype=float).copy()
    mon.start(x, step=gamma)
    k = 0
    while True:
        if mon.budget_left() < cost:
            return mon.stop("budget")
        k += 1
        if config.batch is None:
            g = smoothed.grad(x)
        else:
            g = smoothed.batch_value_grad(x, rng.integers(0, n, size=config.batch))[1]
        x = reg.prox(x - gamma * g, gamma)
        reason = mon.record(k, x, cost, step=gamma)
        if reason:
            return mon.stop(reason)
