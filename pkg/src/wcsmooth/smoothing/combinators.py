"""Build smooth approximations of composite functions from smoothed parts."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..core import AbsLoss, RobustLoss, RobustRegressionProblem, pairwise_mean
from ..errors import CapabilityError, ParameterError
from .base import SAMeta, SmoothedObjective
from .moreau import MoreauAbs, MoreauRobust
from .nesterov import HuberAbs, HuberRobust, huber

MINIBATCH_MEMORY_LIMIT = 2**30  # bytes for one minibatch of per-sample gradients


def _weighted(descs, weights, two_args):
    if all(not callable(d) for d in descs):
        return float(sum(w * d for d, w in zip(descs, weights)))
    if two_args:
        return lambda x, y: float(sum(w * (d(x, y) if callable(d) else d) for d, w in zip(descs, weights)))
    return lambda x: float(sum(w * (d(x) if callable(d) else d) for d, w in zip(descs, weights)))


def _optional_sum(vals, weights):
    if any(v is None for v in vals):
        return None
    return float(sum(w * v for v, w in zip(vals, weights)))


class SumSmoothed(SmoothedObjective):
    """``sum_i w_i f_{i,eta}`` for smoothed parts sharing ``eta`` and dimension."""

    def __init__(self, parts: Sequence[SmoothedObjective], weights: Sequence[float]):
        if len(parts) == 0 or len(parts) != len(weights):
            raise ParameterError("need matching non-empty parts and weights")
        if any(w < 0 for w in weights):
            raise ParameterError("weights must be nonnegative")
        etas = {p.eta for p in parts}
        if len(etas) != 1:
            raise ParameterError(f"parts use different eta values {sorted(etas)}")
        dims = {p.dim for p in parts}
        if len(dims) != 1:
            raise ParameterError("parts have mismatched dimensions")
        self.parts, self.weights = list(parts), [float(w) for w in weights]
        self.eta, self.dim = etas.pop(), dims.pop()
        metas = [p.meta for p in parts]
        w = self.weights
        self.meta = SAMeta(
            rho_bar=float(sum(wi * m.rho_bar for m, wi in zip(metas, w))),
            eta=self.eta,
            R_eta=_weighted([m.R_eta for m in metas], w, two_args=False),
            L_eta=_weighted([m.L_eta for m in metas], w, two_args=True),
            R_coef=_optional_sum([m.R_coef for m in metas], w),
            B=_optional_sum([m.B for m in metas], w),
            L_coef=_optional_sum([m.L_coef for m in metas], w),
        )

    def sample_values_grads(self, x, idx):
        v, g = 0.0, np.zeros(self.dim)
        for p, w in zip(self.parts, self.weights):
            pv, pg = p.value_grad(x)
            v += w * pv
            g = g + w * pg
        n = len(idx)
        return np.full(n, v), np.tile(g, (n, 1))

    def true_value(self, x):
        return float(sum(w * p.true_value(x) for p, w in zip(self.parts, self.weights)))

    def with_eta(self, eta):
        return SumSmoothed([p.with_eta(eta) for p in self.parts], self.weights)


def combine_sum(parts) -> SumSmoothed:
    """Weighted sum of smoothed parts given as ``[(objective, weight), ...]``."""
    objs = [p for p, _ in parts]
    return SumSmoothed(objs, [w for _, w in parts])


class FiniteSumSmoothed(SmoothedObjective):
    """Uniform average of single-sample smoothed objectives; sample ``i`` is part ``i``."""

    def __init__(self, parts: Sequence[SmoothedObjective]):
        inner = SumSmoothed(parts, [1.0 / len(parts)] * len(parts))
        self.parts = inner.parts
        self.meta, self.eta, self.dim = inner.meta, inner.eta, inner.dim
        self.n_samples = len(parts)

    def sample_values_grads(self, x, idx):
        out = [self.parts[i].value_grad(x) for i in idx]
        return np.array([v for v, _ in out]), np.array([g for _, g in out]).reshape(len(idx), self.dim)

    def true_value(self, x):
        return float(pairwise_mean(np.array([p.true_value(x) for p in self.parts])))

    def with_eta(self, eta):
        return FiniteSumSmoothed([p.with_eta(eta) for p in self.parts])


def smooth_losses(samples: Sequence, smoother: str | Callable, eta: float) -> SmoothedObjective:
    """Smooth a list of per-sample losses and average them.

    ``smoother`` is ``"huber"``, ``"moreau"`` or a callable ``(loss, eta) -> SmoothedObjective``.
    Robust losses sharing one ``hkind`` are vectorized.
    """
    if callable(smoother):
        return FiniteSumSmoothed([smoother(s, eta) for s in samples])
    if all(isinstance(s, RobustLoss) for s in samples) and len({s.hkind for s in samples}) == 1:
        problem = RobustRegressionProblem(
            np.array([s.a for s in samples]), np.array([s.b for s in samples]), samples[0].hkind,
            rho=[s.rho for s in samples])
        return {"huber": HuberRobust, "moreau": MoreauRobust}[smoother](problem, eta)
    if all(isinstance(s, AbsLoss) for s in samples):
        cls = {"huber": HuberAbs, "moreau": MoreauAbs}[smoother]
        return FiniteSumSmoothed([cls(s.dim, eta) for s in samples])
    raise CapabilityError(f"cannot apply smoother {smoother!r} to these samples")


@dataclass
class MinibatchOracle:
    """Unbiased minibatch gradient of a finite-sum smoothed objective.

    Indices are drawn uniformly with replacement from ``rng``; ``batch=None``
    uses every sample once (deterministic mode).
    """

    objective: SmoothedObjective
    batch: int | None
    rng: np.random.Generator

    def draw(self):
        m = self.objective.n_samples
        if self.batch is None:
            return np.arange(m)
        return self.rng.integers(0, m, size=self.batch)

    def __call__(self, x):
        return self.objective.batch_value_grad(x, self.draw())[1]


def combine_minibatch(samples, smoother, eta: float, batch: int | None, rng) -> MinibatchOracle:
    """Stochastic gradient oracle for the average of smoothed samples."""
    obj = samples if isinstance(samples, SmoothedObjective) else smooth_losses(samples, smoother, eta)
    if batch is not None:
        if batch < 1:
            raise ParameterError("batch must be at least 1")
        if batch * obj.dim * 8 > MINIBATCH_MEMORY_LIMIT:
            raise ParameterError(f"batch of {batch} gradients exceeds the memory limit")
    return MinibatchOracle(obj, batch, rng)


# ---------------------------------------------------------------------------
# outer convex functions for h(F(x))


class OuterFunction:
    """Smoothed convex outer function ``h_eta: R^m -> R``.

    Attributes ``lipschitz`` (M), ``nondecreasing`` and ``smoothness``
    (the constant of ``grad h_eta``) describe it; ``error(z)`` bounds
    ``h(z) - h_eta(z)``.
    """

    lipschitz: float
    nondecreasing: bool
    smoothness: float

    def value_grad(self, z):
        raise NotImplementedError

    def true_value(self, z) -> float:
        raise NotImplementedError

    def error(self, z) -> float:
        raise NotImplementedError


class IdentityOuter(OuterFunction):
    """``h(z) = z`` on ``R^1``; already smooth."""

    lipschitz, nondecreasing, smoothness = 1.0, True, 0.0

    def value_grad(self, z):
        z = np.atleast_1d(z)
        return float(z[0]), np.ones(1)

    def true_value(self, z):
        return float(np.atleast_1d(z)[0])

    def error(self, z):
        return 0.0


class PositivePartOuter(OuterFunction):
    """``h(z) = sum_j max(z_j, 0)`` smoothed by a one-sided Huber at level ``eta``."""

    nondecreasing = True

    def __init__(self, m: int, eta: float):
        self.m, self.eta = int(m), float(eta)
        self.lipschitz = float(np.sqrt(self.m))
        self.smoothness = 1.0 / self.eta

    def value_grad(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        v, d = huber(np.maximum(z, 0.0), self.eta)
        return float(np.sum(v)), np.atleast_1d(d)

    def true_value(self, z):
        return float(np.maximum(np.atleast_1d(z), 0.0).sum())

    def error(self, z):
        return 0.5 * self.eta * self.m


class ConvexOuterComposite(SmoothedObjective):
    """``h_eta(F_eta(x))`` with a monotone convex outer and smoothed inner components.

    Metadata: ``rho_bar = sqrt(m) rho_F M`` and
    ``R(x) = R_h(F(x)) + sqrt(m) M R_F(x)``; the smoothness descriptor is
    ``L_h ||J_eta(x)|| + M L_F(x, y)`` with ``J_eta`` the inner Jacobian.
    """

    def __init__(self, outer: OuterFunction, inner: Sequence[SmoothedObjective]):
        if not outer.nondecreasing:
            raise CapabilityError("outer function must be coordinatewise nondecreasing")
        inner = list(inner)
        dims = {f.dim for f in inner}
        etas = {f.eta for f in inner}
        if len(dims) != 1 or len(etas) != 1:
            raise ParameterError("inner components must share dim and eta")
        self.outer, self.inner = outer, inner
        self.dim, self.eta = dims.pop(), etas.pop()
        m, M = len(inner), outer.lipschitz
        rho_F = max(f.meta.rho_bar for f in inner)
        self._sqm_M = np.sqrt(m) * M

        def R_eta(x):
            Fx = np.array([f.true_value(x) for f in inner])
            return outer.error(Fx) + self._sqm_M * max(f.meta.R_at(x) for f in inner)

        def L_eta(x, y):
            jac = np.array([f.grad(x) for f in inner])
            jn = float(np.linalg.norm(jac, 2))
            return outer.smoothness * jn + M * max(f.meta.L_at(x, y) for f in inner)

        self.meta = SAMeta(rho_bar=float(self._sqm_M * rho_F), eta=self.eta, R_eta=R_eta, L_eta=L_eta)

    def sample_values_grads(self, x, idx):
        vg = [f.value_grad(x) for f in self.inner]
        z = np.array([v for v, _ in vg])
        J = np.array([g for _, g in vg])
        v, dh = self.outer.value_grad(z)
        g = J.T @ dh
        n = len(idx)
        return np.full(n, v), np.tile(g, (n, 1))

    def true_value(self, x):
        return self.outer.true_value(np.array([f.true_value(x) for f in self.inner]))


def compose_convex_outer(h_eta: OuterFunction, F_eta) -> ConvexOuterComposite:
    if isinstance(F_eta, SmoothedObjective):
        F_eta = [F_eta]
    return ConvexOuterComposite(h_eta, F_eta)


class LinearPrecomposed(SmoothedObjective):
    """``g_eta(A x)``.

    Metadata: ``rho = rho_bar ||A||^2``, ``R(x) = R_g(Ax)`` and
    ``L(x, y) = ||A||^2 L_g(Ax, Ay)``.
    """

    def __init__(self, g_eta: SmoothedObjective, A):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[0] != g_eta.dim:
            raise ParameterError(f"A has {A.shape[0]} rows but g expects dimension {g_eta.dim}")
        self.g, self.A = g_eta, A
        self.dim, self.eta = A.shape[1], g_eta.eta
        self.op_norm = float(np.linalg.norm(A, 2))
        a2 = self.op_norm**2
        gm = g_eta.meta
        R = gm.R_eta if gm.constant_R else (lambda x: gm.R_at(A @ x))
        L = a2 * gm.L_eta if gm.constant_L else (lambda x, y: a2 * gm.L_at(A @ x, A @ y))
        self.meta = SAMeta(
            rho_bar=gm.rho_bar * a2,
            eta=self.eta,
            R_eta=R,
            L_eta=L,
            R_coef=gm.R_coef,
            B=None if gm.B is None else a2 * gm.B,
            L_coef=None if gm.L_coef is None else a2 * gm.L_coef,
        )

    def sample_values_grads(self, x, idx):
        v, g = self.g.value_grad(self.A @ x)
        n = len(idx)
        return np.full(n, v), np.tile(self.A.T @ g, (n, 1))

    def true_value(self, x):
        return self.g.true_value(self.A @ x)

    def with_eta(self, eta):
        return LinearPrecomposed(self.g.with_eta(eta), self.A)


def precompose_linear(g_eta: SmoothedObjective, A) -> LinearPrecomposed:
    return LinearPrecomposed(g_eta, A)
