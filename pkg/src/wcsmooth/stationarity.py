"""Stationarity measures for ``phi_eta = f_eta + r`` and their translation to the nonsmooth problem."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Regularizer
from .errors import ConvergenceError, ParameterError
from .smoothing.base import SmoothedObjective


@dataclass(frozen=True)
class StationarityReport:
    """Measured quantities at a point plus the derived ``(delta, eps)`` pair.

    ``measure`` names the quantity the conversion started from:
    ``"gradient"`` (generalized gradient) or ``"moreau"``.
    """

    gen_grad_norm: float
    moreau_grad_norm: float
    delta: float
    eps: float
    gamma: float
    rho_hat: float
    eta: float
    measure: str

    def columns(self) -> dict:
        return {"gen_grad_norm": self.gen_grad_norm, "moreau_grad_norm": self.moreau_grad_norm,
                "delta": self.delta, "eps_prime": self.eps}


def generalized_gradient(obj: SmoothedObjective, reg: Regularizer, x, gamma: float, grad=None):
    """``G = (x - xhat) / gamma`` with ``xhat = prox_{gamma r}(x - gamma grad f_eta(x))``.

    Returns ``(G, xhat)``. A precomputed gradient may be passed as ``grad``.
    """
    if not gamma > 0:
        raise ParameterError("gamma must be positive")
    x = np.asarray(x, dtype=float)
    g = obj.grad(x) if grad is None else grad
    xhat = reg.prox(x - gamma * g, gamma)
    return (x - xhat) / gamma, xhat


def moreau_measure(obj: SmoothedObjective, reg: Regularizer, x, rho_hat: float,
                   inner_tol: float = 1e-8, max_iter: int = 100000, return_point: bool = False):
    """Norm of the Moreau-envelope gradient of ``phi_eta`` at level ``rho_hat``.

    Solves ``min_z phi_eta(z) + rho_hat/2 ||z - x||^2`` with the accelerated
    line-search method (strong convexity ``rho_hat - rho_bar``) until the
    prox-gradient mapping is below ``inner_tol`` and returns
    ``rho_hat ||x - z||``.
    """
    from .solvers.sipp import ProximalSubproblem  # solvers depend on this module
    from .solvers.agls import agls

    rho_bar = obj.meta.rho_bar
    if not rho_hat > rho_bar:
        raise ParameterError(f"rho_hat={rho_hat} must exceed rho_bar={rho_bar}")
    x = np.asarray(x, dtype=float)
    sub = ProximalSubproblem(obj, reg, x, rho_hat)
    mu = rho_hat - rho_bar
    L0 = max(obj.meta.L_at(x, x) if obj.meta.constant_L else 1.0, 1e-8)
    z, stats = agls(sub.smooth_part(mu), sub.prox_part(mu), x, mu=mu, L0=L0, T=max_iter,
                    grad_tol=inner_tol)
    norm = rho_hat * float(np.linalg.norm(x - z))
    if stats.reason != "grad_tol":
        raise ConvergenceError("Moreau measure subproblem did not reach inner_tol", last=z,
                               info={"norm": norm, "iterations": stats.iterations})
    return (norm, z) if return_point else norm


def convert_stationarity(eps: float, R_at: float, rho: float, rho_bar: float, rho_hat: float,
                         gamma: float = 0.0, L_local: float = 0.0, mode: str = "gradient"):
    """Translate smoothed stationarity into ``(delta, eps')`` for the nonsmooth problem.

    ``mode="gradient"`` starts from ``||G_gamma(x)|| <= eps``:
    ``delta = sqrt(2R/(rho_hat - rho)) + gamma eps`` and
    ``eps' = (1 + gamma L) eps + rho_hat sqrt(2R/(rho_hat - rho))``.
    ``mode="moreau"`` starts from a Moreau-gradient norm at level ``rho_hat``:
    ``delta = sqrt(2R/(rho_hat - rho)) + eps / rho_hat`` and
    ``eps' = rho_hat sqrt(2R/(rho_hat - rho)) + eps``.
    """
    if not rho_hat > max(rho, rho_bar):
        raise ParameterError(f"rho_hat={rho_hat} must exceed max(rho, rho_bar)={max(rho, rho_bar)}")
    if R_at < 0 or eps < 0:
        raise ParameterError("R and eps must be nonnegative")
    root = math.sqrt(2.0 * R_at / (rho_hat - rho))
    if mode == "gradient":
        return root + gamma * eps, (1.0 + gamma * L_local) * eps + rho_hat * root
    if mode == "moreau":
        return root + eps / rho_hat, rho_hat * root + eps
    raise ParameterError(f"unknown mode {mode!r}")


def choose_eta(eps_target: float) -> float:
    """Smoothing level for a target accuracy: ``eta = eps^2``."""
    if not eps_target > 0:
        raise ParameterError("eps_target must be positive")
    return eps_target**2


def stationarity_report(obj: SmoothedObjective, reg: Regularizer, x, gamma: float, rho: float,
                        rho_hat: float | None = None, inner_tol: float = 1e-8) -> StationarityReport:
    """Measure both quantities at ``x`` and convert the generalized-gradient one."""
    x = np.asarray(x, dtype=float)
    rho_bar = obj.meta.rho_bar
    rho_hat = 2.0 * max(rho, rho_bar, 0.5) if rho_hat is None else rho_hat
    G, xhat = generalized_gradient(obj, reg, x, gamma)
    gnorm = float(np.linalg.norm(G))
    mnorm = moreau_measure(obj, reg, x, rho_hat, inner_tol)
    delta, eps = convert_stationarity(gnorm, obj.meta.R_at(xhat), rho, rho_bar, rho_hat,
                                      gamma, obj.meta.L_at(x, xhat), mode="gradient")
    return StationarityReport(gnorm, mnorm, delta, eps, gamma, rho_hat, obj.eta, "gradient")
