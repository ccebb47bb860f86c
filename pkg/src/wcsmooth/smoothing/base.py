"""Smooth-approximation metadata and the smoothed-objective oracle contract."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from ..core import CompositeProblem, pairwise_mean
from ..errors import CapabilityError, ParameterError

Descriptor = Union[float, Callable]


@dataclass(frozen=True)
class SAMeta:
    """Parameters ``(rho_bar, R_eta, L_eta)`` of a smooth approximation.

    ``R_eta`` is a float or a callable ``x -> float``; ``L_eta`` is a float or a
    callable ``(x, y) -> float``. When the descriptors have the shapes
    ``R_eta = R_coef * eta`` and ``L_eta = B + L_coef / eta`` the coefficients
    are recorded too, which is what the theory-driven stepsizes need.
    """

    rho_bar: float
    eta: float
    R_eta: Descriptor
    L_eta: Descriptor
    R_coef: float | None = None
    B: float | None = None
    L_coef: float | None = None

    def __post_init__(self):
        if not self.rho_bar >= 0:
            raise ParameterError(f"rho_bar must be nonnegative, got {self.rho_bar}")
        if not self.eta > 0:
            raise ParameterError(f"eta must be positive, got {self.eta}")

    def R_at(self, x=None) -> float:
        if callable(self.R_eta):
            return float(self.R_eta(x))
        return float(self.R_eta)

    def L_at(self, x=None, y=None) -> float:
        if callable(self.L_eta):
            return float(self.L_eta(x, x if y is None else y))
        return float(self.L_eta)

    @property
    def constant_R(self) -> bool:
        return not callable(self.R_eta)

    @property
    def constant_L(self) -> bool:
        return not callable(self.L_eta)

    def require_constant_L(self) -> float:
        if not self.constant_L:
            raise CapabilityError(
                "this method needs a constant smoothness descriptor B + L/eta; "
                "the smoothed objective only provides a point-dependent bound"
            )
        return float(self.L_eta)

    def columns(self) -> dict:
        """Named scalars for trace headers (NaN where not applicable)."""
        nan = float("nan")
        return {
            "rho_bar": float(self.rho_bar),
            "R_const": float(self.R_eta) if self.constant_R else nan,
            "B": nan if self.B is None else float(self.B),
            "L": nan if self.L_coef is None else float(self.L_coef),
            "eta": float(self.eta),
        }


class SmoothedObjective:
    """Oracle for a smooth approximation ``f_eta`` of a nonsmooth ``f``.

    Subclasses set ``n_samples``, ``dim``, ``eta``, ``meta`` and implement
    :meth:`sample_values_grads`. Full oracles average the per-sample ones with
    a fixed-order pairwise reduction.
    """

    n_samples: int = 1
    dim: int
    eta: float
    meta: SAMeta
    problem: CompositeProblem | None = None

    def sample_values_grads(self, x, idx):
        raise NotImplementedError

    @property
    def all_indices(self):
        return np.arange(self.n_samples)

    @property
    def convex(self) -> bool:
        """Whether ``f_eta`` is known to be convex (always true when ``rho_bar = 0``)."""
        return self.meta.rho_bar == 0

    def value_grad(self, x):
        vals, grads = self.sample_values_grads(np.asarray(x, dtype=float), self.all_indices)
        return float(pairwise_mean(vals)), pairwise_mean(grads)

    def value(self, x) -> float:
        return self.value_grad(x)[0]

    def grad(self, x) -> np.ndarray:
        return self.value_grad(x)[1]

    def batch_value_grad(self, x, idx):
        """Average over the (possibly repeated) indices ``idx``."""
        vals, grads = self.sample_values_grads(np.asarray(x, dtype=float), np.asarray(idx))
        return float(pairwise_mean(vals)), pairwise_mean(grads)

    def true_value(self, x) -> float:
        """The unsmoothed loss ``f(x)``."""
        if self.problem is None:
            raise CapabilityError("no underlying nonsmooth problem attached")
        return self.problem.value(x)

    def with_eta(self, eta: float) -> "SmoothedObjective":
        raise CapabilityError(f"{type(self).__name__} cannot be rebuilt with a new eta")


class QuadraticSmooth(SmoothedObjective):
    """``0.5 <x, H x> - <c, x> + const``, its own exact smooth approximation.

    Useful as a test fixture and as a building block for combinators.
    """

    def __init__(self, H, c=None, const=0.0, eta=1.0):
        H = np.atleast_2d(np.asarray(H, dtype=float))
        self.H = 0.5 * (H + H.T)
        self.dim = self.H.shape[0]
        self.c = np.zeros(self.dim) if c is None else np.asarray(c, dtype=float)
        self.const = float(const)
        self.eta = float(eta)
        eig = np.linalg.eigvalsh(self.H)
        self.lam_min, self.lam_max = float(eig[0]), float(eig[-1])
        self.meta = SAMeta(
            rho_bar=max(0.0, -self.lam_min),
            eta=self.eta,
            R_eta=0.0,
            L_eta=max(abs(self.lam_min), abs(self.lam_max)),
            R_coef=0.0,
            B=max(abs(self.lam_min), abs(self.lam_max)),
            L_coef=0.0,
        )

    def sample_values_grads(self, x, idx):
        Hx = self.H @ x
        v = 0.5 * float(x @ Hx) - float(self.c @ x) + self.const
        g = Hx - self.c
        n = len(idx)
        return np.full(n, v), np.tile(g, (n, 1))

    def true_value(self, x) -> float:
        return self.value(x)

    def with_eta(self, eta):
        return QuadraticSmooth(self.H, self.c, self.const, eta)

    def minimizer(self):
        return np.linalg.solve(self.H, self.c)
