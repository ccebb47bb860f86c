"""Oracle accounting, stopping rules and trace logging shared by the solvers."""
from __future__ import annotations

import math

import numpy as np

from ..core import Regularizer
from ..stationarity import generalized_gradient
from .config import SolverConfig
from .trace import NAN, Trace


class BudgetExhausted(Exception):
    """Raised by :class:`GuardedOracle` instead of making a call the budget cannot cover."""


class GuardedOracle:
    """Wraps ``g(x) -> (value, grad)`` and counts calls of cost ``n`` each.

    Calls that would push the total past ``limit`` raise :class:`BudgetExhausted`.
    ``on_iter`` keeps the last accepted iterate so the caller can fall back to it.
    """

    def __init__(self, g, n: int, limit: float):
        self.g, self.n, self.limit = g, n, limit
        self.calls = 0
        self.last = None

    def __call__(self, x):
        if (self.calls + 1) * self.n > self.limit:
            raise BudgetExhausted
        self.calls += 1
        return self.g(x)

    def on_iter(self, t, y, stats):
        self.last = y
        return False


class Monitor:
    """Tracks oracle use, logs rows and decides when a run stops.

    ``smoothed`` supplies ``phi_eta`` and the generalized gradient; for
    unsmoothed baselines pass ``smoothed=None`` and a ``true_fn``.
    Rows are logged every ``config.eval_every`` iterations (default: every
    iteration for full gradients, once per pass over the data otherwise).
    """

    def __init__(self, smoothed, reg: Regularizer, config: SolverConfig, f_stop=None,
                 true_fn=None, n_samples=None):
        self.smoothed, self.reg, self.config = smoothed, reg, config
        self.f_stop = config.f_stop if f_stop is None else f_stop
        self.true_fn = true_fn if true_fn is not None else smoothed.true_value
        n = n_samples if n_samples is not None else smoothed.n_samples
        if config.eval_every is not None:
            self.every = config.eval_every
        elif config.batch is None:
            self.every = 1
        else:
            self.every = max(1, n // config.batch)
        meta = smoothed.meta.columns() if smoothed is not None else {}
        self.trace = Trace(meta=meta, config=config.as_dict())
        self.oracles = 0
        self.k = 0
        self.last_x = None
        self._last_logged = -1
        self._pending = None

    def budget_left(self) -> float:
        b = self.config.budget
        return math.inf if b is None else b - self.oracles

    def _row(self, k, x, step, Lhat, ls_steps, surrogate, objective):
        f_true = self.true_fn(x)
        phi = gnorm = NAN
        obj = objective if objective is not None else self.smoothed
        if obj is not None:
            v, g = obj.value_grad(x)
            phi = v + self.reg.value(x)
            if step is not None and step > 0 and np.isfinite(step):
                G, _ = generalized_gradient(obj, self.reg, x, step, grad=g)
                gnorm = float(np.linalg.norm(G))
        self.trace.append(k, self.oracles, f_true, phi, gnorm, surrogate,
                          NAN if step is None else step, Lhat, ls_steps)
        self._last_logged = k
        return f_true

    def start(self, x, step=None):
        self.last_x = np.asarray(x, dtype=float).copy()
        self._row(0, self.last_x, step, NAN, NAN, NAN, None)

    def record(self, k, x, used, step=None, Lhat=NAN, ls_steps=NAN, surrogate=NAN, objective=None,
               force=False):
        """Account ``used`` oracles for iteration ``k`` and return a stop reason or None."""
        self.oracles += int(used)
        self.k = k
        self.last_x = x
        self._pending = (step, Lhat, ls_steps, surrogate, objective)
        if not np.all(np.isfinite(x)):
            self._pending = None
            self.trace.append(k, self.oracles, NAN, NAN, NAN, NAN, NAN if step is None else step, Lhat, ls_steps)
            self._last_logged = k
            return "diverged"
        over_budget = self.config.budget is not None and self.oracles >= self.config.budget
        at_cap = self.config.K is not None and k >= self.config.K
        if force or over_budget or at_cap or k % self.every == 0:
            f_true = self._row(k, x, step, Lhat, ls_steps, surrogate, objective)
            if not np.isfinite(f_true):
                return "diverged"
            if self.f_stop is not None and f_true <= self.f_stop:
                return "converged"
        if over_budget:
            return "budget"
        if at_cap:
            return "max_iter"
        return None

    def record_failure(self, k):
        self.k = k

    def stop(self, reason: str) -> Trace:
        if self._last_logged != self.k and self._pending is not None and self.k > 0:
            step, Lhat, ls_steps, surrogate, objective = self._pending
            self._row(self.k, self.last_x, step, Lhat, ls_steps, surrogate, objective)
        self.trace.finish(reason)
        self.trace.final_x = None if self.last_x is None else np.array(self.last_x)
        return self.trace
