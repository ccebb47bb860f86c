"""Property suites that compare the oracles against independent computations.

Each check returns a list of :class:`CheckResult`; ``run_suite`` groups
them by name (``gradients``, ``sandwich``, ``prox``, ``rates``); the ``prox``
suite includes the Moreau identities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (AbsLoss, MaxQuadraticProblem, RobustLoss, RobustRegressionProblem, Zero, h_eval,
                   soft_threshold)
from .smoothing import HuberRobust, MoreauRobust, SoftmaxMax
from .smoothing.moreau import moreau_envelope, prox_abs_quadratic, prox_linear
from .solvers.agls import agls, unconstrained


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tol: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name} worst={self.worst:.3e} tol={self.tol:.1e} {self.detail}".rstrip()


def _robust_instance(rng, m, n, hkind, scale=1.0):
    A = rng.standard_normal((m, n)) * scale
    x = rng.standard_normal(n) / math.sqrt(n)
    b = h_eval(A @ x, hkind)[0] + rng.standard_normal(m)
    return RobustRegressionProblem(A, b, hkind, Zero())


def _pwq_instance(rng, m, n):
    As = np.empty((m, n, n))
    for j in range(m):
        C = rng.standard_normal((n, n))
        As[j] = C @ C.T
    As[0] += 1e-3 * np.eye(n)
    return MaxQuadraticProblem(As, rng.standard_normal((m, n)), Zero())


def _smoothed_instances(rng):
    """Objects covering Huber (three link functions), softmax and Moreau."""
    out = []
    for hkind, scale in (("quad", 1.0), ("quintic", 0.3), ("exp", 0.5)):
        out.append((f"huber-{hkind}", HuberRobust(_robust_instance(rng, 30, 6, hkind, scale), 0.3)))
    out.append(("softmax", SoftmaxMax(_pwq_instance(rng, 5, 6), 0.4)))
    out.append(("moreau-quad", MoreauRobust(_robust_instance(rng, 30, 6, "quad"), 0.5)))
    return out


# ---------------------------------------------------------------------------


def check_sandwich(n_points: int = 200, tol: float = 1e-9, seed: int = 0):
    """``f_eta <= f <= f_eta + R_eta(x)`` at random points."""
    rng = np.random.default_rng(seed)
    results = []
    for name, obj in _smoothed_instances(rng):
        worst = -math.inf
        for _ in range(n_points):
            x = rng.standard_normal(obj.dim)
            fe, f, R = obj.value(x), obj.true_value(x), obj.meta.R_at(x)
            scale = max(1.0, abs(f))
            worst = max(worst, (fe - f) / scale, (f - fe - R) / scale)
        results.append(CheckResult(f"sandwich[{name}]", worst <= tol, max(worst, 0.0), tol))
    return results


def _near_kink(name, obj, x, h):
    """True when ``x`` lies within a few FD steps of a second-derivative kink."""
    if name.startswith("huber"):
        r, d1 = obj.problem.residuals(x, obj.all_indices)
        reach = 4 * h * np.abs(d1) * np.linalg.norm(obj.problem.A, axis=1)
        return bool(np.any(np.abs(np.abs(r) - obj.eta) <= reach + 1e-12))
    if name.startswith("moreau"):
        # the prox switches regime where the dual slope at y = +-1 changes sign
        p = obj.problem
        s = (p.A * p.A).sum(axis=1)
        u0 = p.A @ x
        reach = 4 * h * np.sqrt(s) * (1.0 + np.abs(u0)) * (1.0 + np.abs(u0))
        for y in (-1.0, 1.0):
            u = u0 * obj.beta / (obj.beta + 2.0 * y * s)
            slope = u * u - p.b
            if np.any(np.abs(slope) <= reach * (1.0 + np.abs(p.b))):
                return True
        return False
    return False


def check_gradients(n_points: int = 100, tol: float = 1e-6, seed: int = 1):
    """Analytic gradients vs central differences, relative error."""
    rng = np.random.default_rng(seed)
    results = []
    for name, obj in _smoothed_instances(rng):
        worst, used, skipped = 0.0, 0, 0
        while used < n_points:
            if skipped > 50 * n_points:
                raise RuntimeError(f"{name}: kink filter rejected too many points")
            x = rng.standard_normal(obj.dim)
            h = 1e-5 * max(1.0, float(np.linalg.norm(x)))
            if _near_kink(name, obj, x, h):
                skipped += 1
                continue
            g = obj.grad(x)
            fd = np.empty_like(x)
            for j in range(x.size):
                e = np.zeros_like(x)
                e[j] = h
                fd[j] = (obj.value(x + e) - obj.value(x - e)) / (2 * h)
            worst = max(worst, float(np.linalg.norm(g - fd) / max(1.0, np.linalg.norm(g))))
            used += 1
        results.append(CheckResult(f"gradient[{name}]", worst <= tol, worst, tol, f"skipped={skipped}"))
    return results


def _grid_prox(obj_fn, center, radius, step=1e-5):
    grid = center + np.arange(-radius, radius + step, step)
    return float(grid[np.argmin(obj_fn(grid))])


def check_prox(n_instances: int = 50, tol: float = 1e-4, seed: int = 2):
    """1-D prox of ``|(a y)^2 - b|`` by the dual search and by prox-linear vs a grid."""
    rng = np.random.default_rng(seed)
    worst_dual = worst_pl = 0.0
    for _ in range(n_instances):
        a = rng.uniform(0.2, 2.0) * rng.choice((-1.0, 1.0))
        b = rng.uniform(-2.0, 4.0)
        xbar = rng.uniform(-3.0, 3.0)
        gamma = 2.0 * a * a * rng.uniform(1.2, 6.0)
        fx = abs((a * xbar) ** 2 - b)
        radius = math.sqrt(2.0 * fx / gamma) + 1e-4
        ref = _grid_prox(lambda y: np.abs((a * y) ** 2 - b) + 0.5 * gamma * (y - xbar) ** 2, xbar, radius)
        xd = prox_abs_quadratic(np.array([a]), None, -b, np.array([xbar]), gamma)[0][0]
        xl = prox_linear(lambda y: ((a * y[0]) ** 2 - b, np.array([2 * a * a * y[0]])), np.array([xbar]),
                         gamma, curvature=2 * a * a, tol=1e-13, max_iter=5000)[0]
        worst_dual = max(worst_dual, abs(xd - ref))
        worst_pl = max(worst_pl, abs(xl - ref))
    return [CheckResult("prox[dual-search]", worst_dual <= tol, worst_dual, tol),
            CheckResult("prox[prox-linear]", worst_pl <= tol, worst_pl, tol)]


def check_moreau(n_pairs: int = 100, tol: float = 1e-10, seed: int = 3):
    """``grad = beta (x - prox)`` against an independent prox, and the prox Lipschitz bound."""
    rng = np.random.default_rng(seed)
    worst_grad = {"abs": 0.0, "quad": 0.0}
    worst_lip = {"abs": -math.inf, "quad": -math.inf}
    d = 4
    for _ in range(n_pairs):
        x, xh = rng.standard_normal(d), rng.standard_normal(d)
        # f = ||.||_1, prox = soft threshold
        beta = rng.uniform(0.5, 5.0)
        f = AbsLoss(d)
        _, g, y = moreau_envelope(f, beta, x)
        _, _, yh = moreau_envelope(f, beta, xh)
        ind = soft_threshold(x, 1.0 / beta)
        worst_grad["abs"] = max(worst_grad["abs"], float(np.max(np.abs(g - beta * (x - ind)))))
        worst_lip["abs"] = max(worst_lip["abs"], beta * np.linalg.norm(y - yh) - beta * np.linalg.norm(x - xh))
        # f = |(a.x)^2 - b|, independent prox by prox-linear
        a = rng.standard_normal(d) / math.sqrt(d)
        b = rng.uniform(-1.0, 2.0)
        loss = RobustLoss(a, b, "quad")
        rho = loss.rho
        beta = rho * rng.uniform(1.5, 4.0)
        _, g, y = moreau_envelope(loss, beta, x)
        _, _, yh = moreau_envelope(loss, beta, xh)
        ind = prox_linear(loss.residual, x, beta, curvature=rho, tol=1e-14, max_iter=20000)
        worst_grad["quad"] = max(worst_grad["quad"], float(np.max(np.abs(g - beta * (x - ind)))))
        lhs = (beta - rho) * np.linalg.norm(y - yh)
        worst_lip["quad"] = max(worst_lip["quad"], lhs - beta * np.linalg.norm(x - xh))
    out = []
    for k in ("abs", "quad"):
        out.append(CheckResult(f"moreau-gradient[{k}]", worst_grad[k] <= tol, worst_grad[k], tol))
        out.append(CheckResult(f"moreau-prox-lipschitz[{k}]", worst_lip[k] <= 1e-12, max(worst_lip[k], 0.0),
                               1e-12))
    return out


def random_quadratic(rng, d, cond):
    """``0.5 x'Hx - c'x`` with spectrum log-spaced in ``[1, cond]``."""
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lam = np.logspace(0.0, math.log10(cond), d)
    H = (Q * lam) @ Q.T
    H = 0.5 * (H + H.T)
    c = rng.standard_normal(d)
    return H, c, lam


def linesearch_bound(T, tau_d, tau_u, L_star, L0):
    """``(1 + log(1/tau_d)/log(tau_u)) T + log_{tau_u}(tau_u L*/L0) + 1``."""
    lu = math.log(tau_u)
    return (1.0 + math.log(1.0 / tau_d) / lu) * T + math.log(tau_u * L_star / L0) / lu + 1.0


def check_rates(n_problems: int = 10, d: int = 50, T: int = 200, seed: int = 4, tau_d=0.5, tau_u=2.0,
                L0: float = 1.0):
    """AGLS envelopes on random quadratics.

    Convex: ``psi(y_T) - psi* <= 2 tau_u L* (T+1)^-2 ||x0 - x*||^2`` with
    ``L* = 2 lambda_max`` for every ``T``. Strongly convex: the gap plus
    ``mu/2 ||z_T - x*||^2`` is at most the product of the per-step factors
    ``1 - sqrt(mu / (Lhat_t + mu))`` times its initial value. The total number
    of line-search trials respects the budget bound after every iteration.
    """
    rng = np.random.default_rng(seed)
    conds = np.logspace(1.0, 4.0, n_problems)
    worst_cvx = worst_sc = worst_ls = -math.inf
    for cond in conds:
        H, c, lam = random_quadratic(rng, d, cond)
        xs = np.linalg.solve(H, c)
        psi_star = 0.5 * xs @ H @ xs - c @ xs
        x0 = xs + rng.standard_normal(d)
        L_star = 2.0 * lam[-1]

        def g(x):
            Hx = H @ x
            return 0.5 * x @ Hx - c @ x, Hx - c

        _, st = agls(g, unconstrained(dim=d), x0, mu=0.0, L0=L0, tau_d=tau_d, tau_u=tau_u, T=T, record=True)
        r0 = float(np.sum((x0 - xs) ** 2))
        total = 0
        for t in range(1, T + 1):
            gap = g(st.ys[t])[0] - psi_star
            env = 2.0 * tau_u * L_star * r0 / (t + 1) ** 2
            worst_cvx = max(worst_cvx, gap / env)
            total += st.trials[t - 1]
            worst_ls = max(worst_ls, total / linesearch_bound(t, tau_d, tau_u, L_star, L0))

        mu = 0.5 * lam[0]
        Hs = H - mu * np.eye(d)

        def gs(x):
            Hx = Hs @ x
            return 0.5 * x @ Hx - c @ x, Hx - c

        _, st = agls(gs, unconstrained(mu=mu, dim=d), x0, mu=mu, L0=L0, tau_d=tau_d, tau_u=tau_u, T=T,
                     record=True)
        e0 = g(x0)[0] - psi_star + 0.5 * mu * r0
        prod = 1.0
        for t in range(1, T + 1):
            prod *= st.contraction[t - 1]
            lhs = g(st.ys[t])[0] - psi_star + 0.5 * mu * float(np.sum((st.zs[t] - xs) ** 2))
            # additive slack: the gap is a difference of O(|psi*|) numbers
            slack = 100.0 * np.finfo(float).eps * (abs(psi_star) + abs(g(x0)[0]))
            worst_sc = max(worst_sc, (lhs - prod * e0 - slack) / e0)
    return [
        CheckResult("agls-convex-envelope", worst_cvx <= 1.0, worst_cvx, 1.0, "max gap/envelope"),
        CheckResult("agls-strongly-convex-product", worst_sc <= 0.0, max(worst_sc, 0.0), 0.0,
                    "max excess/initial"),
        CheckResult("agls-linesearch-budget", worst_ls <= 1.0, worst_ls, 1.0, "max trials/bound"),
    ]


def curvature_witness(p: int = 8, rho: float = 1.0, eps: float = 0.25, y: float = 2.0):
    """Compare quadratic upper bounds for ``g(x) = x^p/p - rho/2 x^2`` expanded at ``y``, evaluated at 0.

    Returns ``(effective, pair_L, lower, upper)``: the effective curvature
    ``2 (g(0) - g(y) + g'(y) y) / y^2``, the pair smoothness constant
    ``|g'(y) - g'(0)| / y``, and the interval ``[(1-eps)(rho + 2L)/2 * 2,
    (rho/2 + L) * 2]`` expressed on the same ``L/2 ||.||^2`` scale.
    """
    g = lambda t: t**p / p - 0.5 * rho * t * t  # noqa: E731
    dg = lambda t: t ** (p - 1) - rho * t  # noqa: E731
    gap = g(0.0) - g(y) - dg(y) * (0.0 - y)
    effective = 2.0 * gap / (y * y)
    pair_L = abs(dg(y) - dg(0.0)) / y
    return effective, pair_L, (1.0 - eps) * (rho + 2.0 * pair_L), rho + 2.0 * pair_L


def check_tightness(p: int = 8, rho: float = 1.0, eps: float = 0.25, y: float = 2.0):
    """The classical ``L/2`` bound fails at the witness pair; the weakly convex one holds and is tight to ``1 - eps``."""
    if not y > rho ** (1.0 / (p - 2)):
        raise ValueError("witness needs y > rho^(1/(p-2))")
    eff, L, lo, hi = curvature_witness(p, rho, eps, y)
    return [
        CheckResult("witness-classical-bound-violated", eff > L, eff - L, 0.0, f"effective={eff:g} L={L:g}"),
        CheckResult("witness-weakly-convex-bound", lo <= eff <= hi, eff, hi, f"interval=[{lo:g}, {hi:g}]"),
    ]


SUITES = {
    "gradients": (check_gradients,),
    "sandwich": (check_sandwich,),
    "prox": (check_prox, check_moreau),
    "rates": (check_rates, check_tightness),
}


def run_suite(name: str):
    if name == "all":
        return [r for key in SUITES for r in run_suite(key)]
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; expected one of {sorted(SUITES)} or 'all'")
    return [r for fn in SUITES[name] for r in fn()]
