"""Solver configuration with validation at construction."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

from ..errors import ParameterError

ALGOS = ("gm", "sgm", "ngd", "sspg", "asgd-sipp", "agls", "agls-sipp")
SCHEDULES = ("constant", "sqrtK", "theory")
STEPSIZE_GRID = (1e-2, 1e-1, 1.0, 10.0)


@dataclass(frozen=True)
class InnerCriterion:
    """Subproblem accuracy ``gap <= lam * initial_gap + zeta``."""

    lam: float = 0.5
    zeta: float = 0.0

    def __post_init__(self):
        if not 0 <= self.lam < 1:
            raise ParameterError("inner criterion needs 0 <= lam < 1")
        if self.zeta < 0:
            raise ParameterError("zeta must be nonnegative")

    def satisfied(self, gap, initial_gap) -> bool:
        return gap <= self.lam * initial_gap + self.zeta


@dataclass(frozen=True)
class Heuristics:
    """Subproblem stopping and parameter decay used in experiment mode."""

    grad_tol: float = 0.75
    max_inner: int = 8
    trigger: int = 6
    gamma_decay: float = 0.5
    gamma_floor: float = 10.0
    eta_decay: bool = True

    def __post_init__(self):
        if not (self.grad_tol > 0 and self.max_inner >= 1 and 0 < self.gamma_decay < 1 and self.gamma_floor > 0):
            raise ParameterError("invalid subproblem heuristics")


@dataclass(frozen=True)
class SolverConfig:
    """Parameters shared by all solvers.

    ``schedule`` picks the stepsize: ``constant`` uses ``alpha0``, ``sqrtK`` uses
    ``alpha0 / sqrt(K)`` with ``K`` the number of iterations the oracle budget
    allows, and ``theory`` uses the constants from the smoothing metadata.
    ``batch=None`` means full gradients (deterministic mode).
    """

    algo: str = "sspg"
    alpha0: float = 0.1
    schedule: str = "constant"
    batch: int | None = None
    eta: float | None = None
    rho_hat: float | None = None
    K: int | None = None
    budget: int | None = None
    seed: int = 0
    L0: float = 1.0
    tau_d: float = 0.5
    tau_u: float = 2.0
    sigma: float = 0.0
    delta0: float | None = None
    eps: float | None = None
    inner: InnerCriterion = field(default_factory=InnerCriterion)
    experiment_mode: bool = False
    heuristics: Heuristics = field(default_factory=Heuristics)
    max_inner_T: int = 100000
    radius: float = 1e5
    f_stop: float | None = None
    eval_every: int | None = None

    def __post_init__(self):
        if self.algo not in ALGOS:
            raise ParameterError(f"unknown algo {self.algo!r}; expected one of {ALGOS}")
        if self.schedule not in SCHEDULES:
            raise ParameterError(f"unknown schedule {self.schedule!r}")
        if not self.alpha0 > 0:
            raise ParameterError("alpha0 must be positive")
        if self.batch is not None and self.batch < 1:
            raise ParameterError("batch must be at least 1")
        if self.eta is not None and not self.eta > 0:
            raise ParameterError("eta must be positive")
        if self.rho_hat is not None and not self.rho_hat > 0:
            raise ParameterError("rho_hat must be positive")
        if self.K is not None and self.K < 1:
            raise ParameterError("K must be at least 1")
        if self.budget is not None and self.budget < 1:
            raise ParameterError("budget must be at least 1")
        if self.K is None and self.budget is None:
            raise ParameterError("set K or an oracle budget")
        if not (self.L0 > 0 and 0 < self.tau_d < 1 and self.tau_u > 1):
            raise ParameterError("line search needs L0 > 0 and 0 < tau_d < 1 < tau_u")
        if self.sigma < 0:
            raise ParameterError("sigma must be nonnegative")
        if not self.radius > 0:
            raise ParameterError("radius must be positive")
        if self.eval_every is not None and self.eval_every < 1:
            raise ParameterError("eval_every must be at least 1")

    def iterations(self, cost: int) -> int:
        """Iteration cap given the per-iteration oracle cost."""
        caps = []
        if self.K is not None:
            caps.append(self.K)
        if self.budget is not None:
            caps.append(self.budget // cost)
        return max(0, min(caps))

    def stepsize(self, cost: int) -> float:
        if self.schedule == "sqrtK":
            return self.alpha0 / math.sqrt(max(1, self.iterations(cost)))
        return self.alpha0

    def as_dict(self) -> dict:
        return asdict(self)
