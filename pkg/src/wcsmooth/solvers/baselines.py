"""Unsmoothed baselines: (stochastic) subgradient method and normalized gradient descent."""
from __future__ import annotations

import numpy as np

from ..core import CompositeProblem, RNGStream, pairwise_mean
from .common import Monitor
from .config import SolverConfig


def _indices(problem, config, rng):
    if config.batch is None:
        return problem.all_indices
    return rng.integers(0, problem.n_samples, size=config.batch)


def subgradient_method(problem: CompositeProblem, config: SolverConfig, x0, f_stop=None):
    """``x <- prox_{alpha r}(x - alpha v)`` with ``v`` a (minibatch) subgradient.

    With a ball-indicator regularizer this is projected subgradient descent.
    """
    mon = Monitor(None, problem.regularizer, config, f_stop, true_fn=problem.value,
                  n_samples=problem.n_samples)
    cost = problem.n_samples if config.batch is None else config.batch
    alpha = config.stepsize(cost)
    rng = RNGStream(config.seed).generator()
    x = np.asarray(x0, dtype=float).copy()
    mon.start(x, step=alpha)
    k = 0
    while True:
        if mon.budget_left() < cost:
            return mon.stop("budget")
        k += 1
        idx = _indices(problem, config, rng)
        _, sub = problem.sample_values_subgrads(x, idx)
        v = pairwise_mean(sub)
        x = problem.regularizer.prox(x - alpha * v, alpha)
        reason = mon.record(k, x, cost, step=alpha)
        if reason:
            return mon.stop(reason)


def normalized_gd(problem: CompositeProblem, config: SolverConfig, x0, f_stop=None):
    """``x <- x - alpha v / ||v||``; stops with reason ``stationary`` when ``v = 0``."""
    mon = Monitor(None, problem.regularizer, config, f_stop, true_fn=problem.value,
                  n_samples=problem.n_samples)
    cost = problem.n_samples if config.batch is None else config.batch
    alpha = config.stepsize(cost)
    rng = RNGStream(config.seed).generator()
    x = np.asarray(x0, dtype=float).copy()
    mon.start(x, step=alpha)
    k = 0
    while True:
        if mon.budget_left() < cost:
            return mon.stop("budget")
        k += 1
        idx = _indices(problem, config, rng)
        _, sub = problem.sample_values_subgrads(x, idx)
        v = pairwise_mean(sub)
        nrm = float(np.linalg.norm(v))
        if nrm == 0.0:
            mon.record(k, x, cost, step=alpha, force=True)
            return mon.stop("stationary")
        x = problem.regularizer.prox(x - alpha * v / nrm, alpha)
        reason = mon.record(k, x, cost, step=alpha)
        if reason:
            return mon.stop(reason)

