"""Composite problem data model: regularizers, per-sample losses and utilities.

A composite problem is ``phi(x) = f(x) + r(x)`` where ``f`` is an average of
weakly convex per-sample losses and ``r`` is convex with a closed-form prox.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ParameterError

HKINDS = ("quad", "quintic", "exp")
_BIG = np.finfo(float).max


# ---------------------------------------------------------------------------
# numerical utilities


def as_point(x, name="x") -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, raising on NaN/Inf."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ParameterError(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError(f"{name} has non-finite entries")
    return arr


def pairwise_sum(values) -> np.ndarray:
    """Sum along the first axis with a fixed binary-tree reduction order.

    The tree shape depends only on the number of rows, so results do not
    depend on how the rows were produced.
    """
    arr = np.asarray(values, dtype=float)
    if arr.shape[0] == 0:
        return np.zeros(arr.shape[1:])
    while arr.shape[0] > 1:
        n = arr.shape[0]
        half = n // 2
        paired = arr[0 : 2 * half : 2] + arr[1 : 2 * half : 2]
        if n % 2:
            paired = np.concatenate([paired, arr[-1:]], axis=0)
        arr = paired
    return arr[0].copy()


def pairwise_mean(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    return pairwise_sum(arr) / arr.shape[0]


def rowdot(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Row-wise inner products ``A @ x`` without BLAS threading effects."""
    return (A * x).sum(axis=1)


def finite_diff_gradient(fvalue: Callable[[np.ndarray], float], x, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        grad[i] = (fvalue(x + e) - fvalue(x - e)) / (2.0 * h)
    return grad


@dataclass(frozen=True)
class RNGStream:
    """Seeded, splittable random stream.

    ``generator()`` always returns a fresh generator positioned at the start
    of the stream, so identical ``(seed, key)`` give identical draws.
    """

    seed: int
    key: tuple = ()

    def generator(self) -> np.random.Generator:
        entropy = [int(self.seed) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in self.key]]
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    def child(self, k: int) -> "RNGStream":
        return RNGStream(self.seed, self.key + (int(k),))


# ---------------------------------------------------------------------------
# regularizers


class Regularizer:
    """Convex prox-friendly term ``r``."""

    kind = "base"

    def value(self, x) -> float:
        raise NotImplementedError

    def prox(self, x, gamma: float) -> np.ndarray:
        """Exact minimizer of ``r(y) + ||y - x||^2 / (2 gamma)``."""
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(Regularizer):
    kind = "zero"

    def value(self, x) -> float:
        return 0.0

    def prox(self, x, gamma: float) -> np.ndarray:
        _check_gamma(gamma)
        return np.array(x, dtype=float)


@dataclass(frozen=True)
class BallIndicator(Regularizer):
    """Indicator of the Euclidean ball ``||x|| <= radius``."""

    radius: float = 1.0
    kind = "ball"

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError("ball radius must be positive")

    def value(self, x) -> float:
        nrm = float(np.linalg.norm(x))
        return 0.0 if nrm <= self.radius * (1.0 + 1e-12) else np.inf

    def prox(self, x, gamma: float) -> np.ndarray:
        _check_gamma(gamma)
        x = np.array(x, dtype=float)
        nrm = float(np.linalg.norm(x))
        if nrm <= self.radius:
            return x
        return x * (self.radius / nrm)


@dataclass(frozen=True)
class L1(Regularizer):
    """``weight * ||x||_1``."""

    weight: float = 1.0
    kind = "l1"

    def __post_init__(self):
        if self.weight < 0:
            raise ParameterError("l1 weight must be nonnegative")

    def value(self, x) -> float:
        return self.weight * float(np.abs(x).sum())

    def prox(self, x, gamma: float) -> np.ndarray:
        _check_gamma(gamma)
        return soft_threshold(np.asarray(x, dtype=float), gamma * self.weight)


def _check_gamma(gamma):
    if not gamma > 0:
        raise ParameterError(f"prox parameter must be positive, got {gamma}")


def soft_threshold(x: np.ndarray, t: float) -> np.ndarray:
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def prox(reg: Regularizer, x, gamma: float) -> np.ndarray:
    """Proximal map of ``gamma * r`` at ``x``."""
    return reg.prox(as_point(x), gamma)


def make_regularizer(kind: str, param: float | None = None) -> Regularizer:
    if kind == "zero":
        return Zero()
    if kind == "ball":
        return BallIndicator(1e5 if param is None else param)
    if kind == "l1":
        return L1(1.0 if param is None else param)
    raise ParameterError(f"unknown regularizer kind {kind!r}")


# ---------------------------------------------------------------------------
# robust losses |h(<a, x>) - b|


def h_eval(z, hkind: str):
    """Return ``(h(z), h'(z), h''(z), saturated)`` elementwise.

    Overflowing entries are clamped to the largest finite float and reported
    through the boolean ``saturated`` array.
    """
    z = np.asarray(z, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        if hkind == "quad":
            h, d1, d2 = z * z, 2.0 * z, np.full_like(z, 2.0)
        elif hkind == "quintic":
            z2 = z * z
            h = z2 * z2 * z + z2 * z + 1.0
            d1 = 5.0 * z2 * z2 + 3.0 * z2
            d2 = 20.0 * z2 * z + 6.0 * z
        elif hkind == "exp":
            ez = np.exp(z)
            h, d1, d2 = ez + 10.0, ez, ez
        else:
            raise ParameterError(f"unknown hkind {hkind!r}; expected one of {HKINDS}")
    out = []
    saturated = np.zeros(z.shape, dtype=bool)
    for arr in (h, d1, d2):
        bad = ~np.isfinite(arr)
        saturated |= bad
        out.append(np.where(bad, np.copysign(_BIG, np.nan_to_num(arr, nan=1.0)), arr))
    return out[0], out[1], out[2], saturated


def h_curvature_bound(hkind: str, zmax: float) -> float:
    """``sup_{|z| <= zmax} |h''(z)|``."""
    if hkind == "quad":
        return 2.0
    if hkind == "quintic":
        return 20.0 * zmax**3 + 6.0 * zmax
    if hkind == "exp":
        return float(np.exp(min(zmax, 709.0)))
    raise ParameterError(f"unknown hkind {hkind!r}")


def robust_rho(a, hkind: str, radius: float = 10.0) -> float:
    """Weak-convexity modulus of ``x -> |h(<a, x>) - b|`` on ``||x|| <= radius``.

    For ``quad`` the bound ``2||a||^2`` is global and ``radius`` is ignored.
    """
    s2 = float(np.dot(a, a))
    return s2 * h_curvature_bound(hkind, np.sqrt(s2) * radius)


def subgrad_robust_loss(a, b: float, hkind: str, x):
    """Value and the chosen subgradient of ``|h(<a, x>) - b|`` (sign(0) = 0)."""
    a = as_point(a, "a")
    x = as_point(x)
    if a.shape != x.shape:
        raise ParameterError("a and x have different dimensions")
    h, d1, _, _ = h_eval(np.dot(a, x), hkind)
    resid = float(h) - b
    return abs(resid), float(np.sign(resid) * d1) * a


class SampleLoss:
    """One nonsmooth per-sample loss with a subgradient oracle."""

    rho = 0.0
    dim = 0

    def value(self, x) -> float:
        raise NotImplementedError

    def subgrad(self, x) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class RobustLoss(SampleLoss):
    """``|h(<a, x>) - b|`` with modulus ``rho`` (defaults to :func:`robust_rho`)."""

    a: np.ndarray
    b: float
    hkind: str = "quad"
    rho: float = field(default=-1.0)

    def __post_init__(self):
        object.__setattr__(self, "a", as_point(self.a, "a"))
        if self.hkind not in HKINDS:
            raise ParameterError(f"unknown hkind {self.hkind!r}")
        if self.rho < 0:
            object.__setattr__(self, "rho", robust_rho(self.a, self.hkind))

    @property
    def dim(self):
        return self.a.size

    def residual(self, x):
        """``(F(x), grad F(x))`` with ``F(x) = h(<a, x>) - b``."""
        h, d1, _, _ = h_eval(np.dot(self.a, x), self.hkind)
        return float(h) - self.b, float(d1) * self.a

    def value(self, x) -> float:
        return abs(self.residual(x)[0])

    def subgrad(self, x) -> np.ndarray:
        return subgrad_robust_loss(self.a, self.b, self.hkind, x)[1]


@dataclass(frozen=True)
class AbsLoss(SampleLoss):
    """``||x||_1``; in one dimension this is ``|x|``. Convex, so ``rho = 0``."""

    dim: int = 1
    rho = 0.0

    def value(self, x) -> float:
        return float(np.abs(x).sum())

    def subgrad(self, x) -> np.ndarray:
        return np.sign(np.asarray(x, dtype=float))

    def prox(self, x, beta: float) -> np.ndarray:
        """Minimizer of ``||y||_1 + beta/2 ||y - x||^2``."""
        return soft_threshold(np.asarray(x, dtype=float), 1.0 / beta)


# ---------------------------------------------------------------------------
# composite problems


class CompositeProblem:
    """Finite-sum ``f(x) = mean_i f_i(x)`` plus a regularizer.

    Subclasses implement :meth:`sample_values_subgrads`; everything else is
    derived from it.
    """

    n_samples: int
    dim: int
    regularizer: Regularizer

    def sample_values_subgrads(self, x, idx):
        """Values ``(len(idx),)`` and subgradients ``(len(idx), dim)``."""
        raise NotImplementedError

    def sample_values(self, x, idx):
        return self.sample_values_subgrads(x, idx)[0]

    @property
    def all_indices(self):
        return np.arange(self.n_samples)

    def value(self, x) -> float:
        """Loss part ``f(x)``."""
        return float(pairwise_mean(self.sample_values(x, self.all_indices)))

    def subgrad(self, x) -> np.ndarray:
        return pairwise_mean(self.sample_values_subgrads(x, self.all_indices)[1])

    def phi(self, x) -> float:
        return self.value(x) + self.regularizer.value(x)

    @property
    def sample_rho(self) -> np.ndarray:
        raise NotImplementedError


class FiniteSumProblem(CompositeProblem):
    """Generic problem built from a list of :class:`SampleLoss` objects."""

    def __init__(self, losses: Sequence[SampleLoss], regularizer: Regularizer | None = None):
        if len(losses) == 0:
            raise ParameterError("need at least one loss")
        dims = {loss.dim for loss in losses}
        if len(dims) != 1:
            raise ParameterError("losses have mismatched dimensions")
        self.losses = list(losses)
        self.n_samples = len(losses)
        self.dim = dims.pop()
        self.regularizer = regularizer or Zero()

    def sample_values_subgrads(self, x, idx):
        vals = np.array([self.losses[i].value(x) for i in idx])
        grads = np.array([self.losses[i].subgrad(x) for i in idx]).reshape(len(idx), self.dim)
        return vals, grads

    @property
    def sample_rho(self):
        return np.array([loss.rho for loss in self.losses])


class RobustRegressionProblem(CompositeProblem):
    """Vectorized ``mean_i |h(<a_i, x>) - b_i| + r(x)``.

    ``rho_radius`` is the ball radius on which per-sample moduli are bounded
    for ``quintic`` and ``exp``; explicit moduli can be passed as ``rho``.
    """

    def __init__(self, A, b, hkind="quad", regularizer: Regularizer | None = None, rho_radius=10.0,
                 rho=None):
        A = np.ascontiguousarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise ParameterError("A must be m x n and b length m")
        if hkind not in HKINDS:
            raise ParameterError(f"unknown hkind {hkind!r}")
        self.A, self.b, self.hkind = A, b, hkind
        self.n_samples, self.dim = A.shape
        self.regularizer = regularizer or Zero()
        self.rho_radius = float(rho_radius)
        self.saturated = False
        if rho is None:
            self._rho = np.array([robust_rho(a, hkind, rho_radius) for a in A])
        else:
            self._rho = np.asarray(rho, dtype=float).reshape(self.n_samples)

    def residuals(self, x, idx):
        """``F_i(x)``, ``h'(<a_i, x>)`` for the rows ``idx``."""
        rows = self.A[idx]
        h, d1, _, sat = h_eval(rowdot(rows, x), self.hkind)
        if sat.any():
            self.saturated = True
        return h - self.b[idx], d1

    def residuals_at_rows(self, X, idx):
        """``F_i(X_k)`` where row ``k`` of ``X`` is evaluated on sample ``idx[k]``."""
        h, _, _, sat = h_eval((self.A[idx] * X).sum(axis=1), self.hkind)
        if sat.any():
            self.saturated = True
        return h - self.b[idx]

    def sample_values_subgrads(self, x, idx):
        resid, d1 = self.residuals(x, idx)
        return np.abs(resid), (np.sign(resid) * d1)[:, None] * self.A[idx]

    def sample_values(self, x, idx):
        return np.abs(self.residuals(x, idx)[0])

    @property
    def sample_rho(self):
        return self._rho

    @property
    def losses(self):
        return [RobustLoss(a, float(bi), self.hkind, float(r)) for a, bi, r in zip(self.A, self.b, self._rho)]


class MaxQuadraticProblem(CompositeProblem):
    """``max_j {0.5 <x, A_j x> - <b_j, x>} + r(x)`` treated as a single sample.

    The subgradient is the gradient of the first active piece.
    """

    def __init__(self, As, bs, regularizer: Regularizer | None = None):
        self.As = np.asarray(As, dtype=float)
        self.bs = np.asarray(bs, dtype=float)
        if self.As.ndim != 3 or self.bs.shape != self.As.shape[:2]:
            raise ParameterError("As must be (m, n, n) and bs (m, n)")
        self.n_pieces, self.dim = self.bs.shape
        self.n_samples = 1
        self.regularizer = regularizer or Zero()

    def piece_values_grads(self, x):
        Ax = np.einsum("jkl,l->jk", self.As, x)
        vals = 0.5 * (Ax * x).sum(axis=1) - (self.bs * x).sum(axis=1)
        return vals, Ax - self.bs

    def sample_values_subgrads(self, x, idx):
        vals, grads = self.piece_values_grads(x)
        j = int(np.argmax(vals))
        n = len(idx)
        return np.full(n, vals[j]), np.tile(grads[j], (n, 1))

    @property
    def piece_smoothness(self):
        return np.array([np.linalg.norm(Aj, 2) for Aj in self.As])

    @property
    def sample_rho(self):
        # the max of quadratics is weakly convex with the worst negative curvature;
        # rounding-level negative eigenvalues of PSD pieces count as zero
        worst = 0.0
        for Aj in self.As:
            lam = np.linalg.eigvalsh(Aj)
            if -lam[0] > 1e-12 * max(1.0, abs(lam[-1])):
                worst = max(worst, -float(lam[0]))
        return np.array([worst])
