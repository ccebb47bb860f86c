"""Synthetic benchmark instances and their text file format."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..core import HKINDS, RNGStream, RobustRegressionProblem, h_eval, make_regularizer, MaxQuadraticProblem
from ..errors import ParameterError
from ..solvers.trace import fmt_float

MAGIC = "SMOPT1"


@dataclass
class RegressionDataset:
    """Robust regression ``mean_i |h(<a_i, x>) - b_i|`` with planted ``x_star``."""

    A: np.ndarray
    b: np.ndarray
    hkind: str
    x_star: np.ndarray
    kappa: float
    p: float
    seed: int
    f_star: float = field(default=float("nan"))

    def __post_init__(self):
        self.A = np.ascontiguousarray(self.A, dtype=float)
        self.b = np.asarray(self.b, dtype=float)
        self.x_star = np.asarray(self.x_star, dtype=float)
        if not np.all(np.isfinite(self.A)):
            raise ParameterError("dataset rows must be finite")
        recomputed = self.problem().value(self.x_star)
        if np.isnan(self.f_star):
            self.f_star = recomputed
        elif abs(recomputed - self.f_star) > 1e-12 * max(1.0, abs(self.f_star)):
            raise ParameterError(f"stored f_star {self.f_star} does not match {recomputed}")

    kind = "robust"

    @property
    def m(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]

    def problem(self, reg="ball", radius=1e5, rho_radius=10.0) -> RobustRegressionProblem:
        return RobustRegressionProblem(self.A, self.b, self.hkind, make_regularizer(reg, radius),
                                       rho_radius=rho_radius)


@dataclass
class PiecewiseQuadratic:
    """``max_j {0.5 <x, A_j x> - <b_j, x>}``; ``pd_min_eig`` certifies ``A_1 > 0``."""

    As: np.ndarray
    bs: np.ndarray
    seed: int
    pd_min_eig: float = field(default=float("nan"))

    kind = "pwq"

    def __post_init__(self):
        self.As = np.asarray(self.As, dtype=float)
        self.bs = np.asarray(self.bs, dtype=float)
        if np.max(np.abs(self.As - self.As.transpose(0, 2, 1))) > 1e-12 * max(1.0, np.abs(self.As).max()):
            raise ParameterError("piece matrices must be symmetric")
        if np.isnan(self.pd_min_eig):
            self.pd_min_eig = smallest_eigenvalue(self.As[0])

    @property
    def m(self):
        return self.As.shape[0]

    @property
    def n(self):
        return self.As.shape[1]

    def problem(self, reg="zero", radius=None) -> MaxQuadraticProblem:
        return MaxQuadraticProblem(self.As, self.bs, make_regularizer(reg, radius))


def smallest_eigenvalue(S, iters: int = 2000, tol: float = 1e-12) -> float:
    """Smallest eigenvalue of a symmetric matrix; ``<= 0`` when it is not positive definite.

    A successful Cholesky factorization certifies ``S > 0``. Inverse power
    iteration through the factor then converges to the smallest eigenvalue;
    it stops once the eigen-residual ``||S v - lam v||`` is below
    ``tol * ||S||_inf``, which bounds the error of ``lam``.
    """
    S = np.asarray(S, dtype=float)
    scale = float(np.abs(S).sum(axis=1).max())
    try:
        C = np.linalg.cholesky(S)
    except np.linalg.LinAlgError:
        return min(0.0, float(np.min(np.diag(S))))
    v = np.ones(S.shape[0]) / np.sqrt(S.shape[0])
    lam = float(v @ S @ v)
    for _ in range(iters):
        w = np.linalg.solve(C.T, np.linalg.solve(C, v))
        v = w / np.linalg.norm(w)
        Sv = S @ v
        lam = float(v @ Sv)
        if np.linalg.norm(Sv - lam * v) <= tol * max(scale, 1.0):
            break
    return lam


def design_scaling(n: int, kappa: float) -> np.ndarray:
    """Column scales evenly spaced from 1 to ``kappa``."""
    if n == 1:
        return np.ones(1)
    return 1.0 + np.arange(n) * (kappa - 1.0) / (n - 1)


def gen_regression(m: int, n: int, kappa: float, p: float, hkind: str, seed: int) -> RegressionDataset:
    """``A = Q D`` with Gaussian ``Q``, planted Gaussian ``x_star`` and a fraction ``p``
    of responses corrupted by ``N(0, 25)`` noise."""
    if m < 1 or n < 1:
        raise ParameterError("m and n must be positive")
    if kappa < 1:
        raise ParameterError("kappa must be at least 1")
    if not 0 <= p <= 1:
        raise ParameterError("p must lie in [0, 1]")
    if hkind not in HKINDS:
        raise ParameterError(f"unknown hkind {hkind!r}")
    rng = RNGStream(seed).generator()
    Q = rng.standard_normal((m, n))
    A = Q * design_scaling(n, kappa)
    x_star = rng.standard_normal(n)
    corrupt = rng.random(m) < p
    noise = 5.0 * rng.standard_normal(m)
    h, _, _, _ = h_eval((A * x_star).sum(axis=1), hkind)
    b = h + np.where(corrupt, noise, 0.0)
    return RegressionDataset(A, b, hkind, x_star, float(kappa), float(p), int(seed))


def gen_piecewise_quadratic(m: int, n: int, seed: int) -> PiecewiseQuadratic:
    """Pieces ``A_j = C C'`` with Gaussian ``C``; ``A_1`` gets ``+1e-3 I``; ``b_j ~ N(0, I)``."""
    if m < 1 or n < 1:
        raise ParameterError("m and n must be positive")
    rng = RNGStream(seed).generator()
    As = np.empty((m, n, n))
    bs = np.empty((m, n))
    for j in range(m):
        C = rng.standard_normal((n, n))
        As[j] = C @ C.T
        bs[j] = rng.standard_normal(n)
    As = 0.5 * (As + As.transpose(0, 2, 1))
    As[0] += 1e-3 * np.eye(n)
    return PiecewiseQuadratic(As, bs, int(seed))


def initial_point(n: int, seed: int) -> np.ndarray:
    """Unit-norm Gaussian direction."""
    if n < 1:
        raise ParameterError("n must be positive")
    v = RNGStream(seed, (1,)).generator().standard_normal(n)
    return v / np.linalg.norm(v)


# ---------------------------------------------------------------------------
# file format


def _line(values) -> str:
    return " ".join(fmt_float(v) for v in np.ravel(values))


def write_dataset(ds, path) -> Path:
    """Header ``SMOPT1 kind m n kappa p hkind seed``, matrix rows, ``b``, ``x_star``.

    Piecewise-quadratic files stack the ``m`` blocks row by row, put all
    ``b_j`` on the ``b`` line and write ``nan`` for ``x_star``.
    """
    path = Path(path)
    if ds.kind == "robust":
        header = [MAGIC, "robust", ds.m, ds.n, fmt_float(ds.kappa), fmt_float(ds.p), ds.hkind, ds.seed]
        rows, b, xs = ds.A, ds.b, ds.x_star
    else:
        header = [MAGIC, "pwq", ds.m, ds.n, "1", "0", "none", ds.seed]
        rows, b, xs = ds.As.reshape(ds.m * ds.n, ds.n), ds.bs, np.full(ds.n, np.nan)
    lines = [" ".join(str(h) for h in header)]
    lines += [_line(r) for r in rows]
    lines += [_line(b), _line(xs)]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_dataset(path):
    text = Path(path).read_text().splitlines()
    head = text[0].split()
    if len(head) != 8 or head[0] != MAGIC:
        raise ParameterError(f"{path}: not a {MAGIC} dataset file")
    kind, m, n = head[1], int(head[2]), int(head[3])
    kappa, p, hkind, seed = float(head[4]), float(head[5]), head[6], int(head[7])
    nrows = m if kind == "robust" else m * n
    if len(text) < 1 + nrows + 2:
        raise ParameterError(f"{path}: truncated file")
    rows = np.array([[float(t) for t in line.split()] for line in text[1 : 1 + nrows]]).reshape(nrows, n)
    b = np.array([float(t) for t in text[1 + nrows].split()])
    xs = np.array([float(t) for t in text[2 + nrows].split()])
    if kind == "robust":
        return RegressionDataset(rows, b, hkind, xs, kappa, p, seed)
    if kind == "pwq":
        return PiecewiseQuadratic(rows.reshape(m, n, n), b.reshape(m, n), seed)
    raise ParameterError(f"{path}: unknown dataset kind {kind!r}")
