"""Benchmark runs: stopping rule, oracle budget, stepsize sweeps."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from ..errors import CapabilityError, ParameterError
from ..smoothing import make_smoothed
from ..solvers import (STEPSIZE_GRID, SolverConfig, agls_minimize, normalized_gd, sipp, sspg,
                       subgradient_method)
from ..solvers.trace import fmt_float
from .datasets import initial_point

TAU_ABS = 1e-3
BUDGET_FACTOR = 400
NOMINAL_ETA = 0.8
PWQ_ETA = 1e-2
SWEEP_COLUMNS = ("alpha0", "seed", "iters", "oracles", "final_f", "reason")
SMOOTHED_ALGOS = ("sspg", "asgd-sipp", "agls", "agls-sipp")


def stop_threshold(f_star: float) -> float:
    """``1.5 max(f*, 1e-3)``; the floor keeps noiseless instances reachable."""
    return 1.5 * max(f_star, TAU_ABS)


def default_eta(f_star: float) -> float:
    """``2 f*^2``, falling back to the nominal 0.8 when ``f* = 0``."""
    eta = 2.0 * f_star**2
    return eta if eta > 0 else NOMINAL_ETA


def dataset_eta(dataset) -> float:
    """Smoothing level used when none is configured."""
    if dataset.kind == "pwq":
        return PWQ_ETA
    return default_eta(dataset.f_star)


def default_smoother(dataset) -> str:
    return "softmax" if dataset.kind == "pwq" else "huber"


def default_budget(dataset) -> int:
    """400 oracle calls per sample; a piecewise quadratic counts as one sample."""
    return BUDGET_FACTOR * (1 if dataset.kind == "pwq" else dataset.m)


def experiment_config(dataset, algo: str, **overrides) -> SolverConfig:
    """Benchmark defaults: budget ``400 m`` and ``alpha0 / sqrt(K)`` stepsizes.

    On robust regression the proximal point methods use the subproblem
    heuristics; on piecewise quadratics they run with their default
    ``rho_hat`` and no stepsize.
    """
    base = dict(algo=algo, schedule="sqrtK", budget=default_budget(dataset),
                experiment_mode=algo in ("asgd-sipp", "agls-sipp") and dataset.kind != "pwq")
    if algo == "sgm":
        base["batch"] = 1
    base.update(overrides)
    return SolverConfig(**base)


def _per_iteration_cost(dataset, config) -> int:
    m = 1 if dataset.kind == "pwq" else dataset.m
    return m if config.batch is None else config.batch


def run_experiment(dataset, algo: str, config: SolverConfig | None = None, smoother: str | None = None,
                   x0=None):
    """Run one solver on a benchmark instance.

    Returns ``(trace, summary)``; ``summary`` holds ``iters``, ``oracles``,
    ``final_f`` and ``reason``. The run stops at ``f <= 1.5 max(f*, 1e-3)`` or
    when the ``400 m`` oracle budget is spent. ``x0`` defaults to the unit
    Gaussian direction for ``config.seed``.
    """
    config = experiment_config(dataset, algo) if config is None else config
    if config.algo != algo:
        config = replace(config, algo=algo)
    if config.budget is None:
        config = replace(config, budget=default_budget(dataset))
    problem = dataset.problem() if dataset.kind == "pwq" else dataset.problem(radius=config.radius)
    f_star = getattr(dataset, "f_star", float("nan"))
    f_stop = config.f_stop
    if f_stop is None and np.isfinite(f_star):
        f_stop = stop_threshold(f_star)
    x0 = initial_point(dataset.n, config.seed) if x0 is None else np.asarray(x0, dtype=float)
    reg = problem.regularizer

    if algo in ("gm", "sgm"):
        trace = subgradient_method(problem, config, x0, f_stop)
    elif algo == "ngd":
        trace = normalized_gd(problem, config, x0, f_stop)
    elif algo in SMOOTHED_ALGOS:
        smoother = smoother or default_smoother(dataset)
        eta = config.eta if config.eta is not None else dataset_eta(dataset)
        if config.eta is None:
            config = replace(config, eta=eta)
        smoothed = make_smoothed(problem, smoother, eta)
        if algo == "sspg":
            trace = sspg(smoothed, reg, config, x0, f_stop)
        elif algo == "agls":
            trace = agls_minimize(smoothed, reg, config, x0, f_stop)
        else:
            trace = sipp(smoothed, reg, config, x0, inner=algo.split("-")[0], f_stop=f_stop)
    else:
        raise ParameterError(f"unknown algo {algo!r}")
    summary = {
        "iters": trace.iterations,
        "oracles": trace.oracle_count,
        "final_f": trace.final_f,
        "reason": trace.reason,
        "f0": trace.column("f_true")[0],
        "f_stop": f_stop,
    }
    return trace, summary


def gap_closure(summary) -> float:
    """Fraction of ``f(x0) - threshold`` removed by the run (1 = reached the threshold)."""
    f0, f1, fs = summary["f0"], summary["final_f"], summary["f_stop"]
    if not (np.isfinite(f1) and np.isfinite(f0)):
        return -math.inf
    if f0 <= fs:
        return 1.0
    return min(1.0, (f0 - f1) / (f0 - fs))


def _sweep_cell(args):
    dataset, algo, alpha0, seed, overrides, smoother = args
    config = experiment_config(dataset, algo, alpha0=alpha0, seed=seed, **overrides)
    _, s = run_experiment(dataset, algo, config, smoother)
    cap = config.iterations(_per_iteration_cost(dataset, config))
    converged = s["reason"] == "converged"
    return {
        "alpha0": alpha0,
        "seed": seed,
        "iters": s["iters"] if converged else cap,
        "oracles": s["oracles"] if converged else config.budget,
        "final_f": s["final_f"],
        "reason": s["reason"],
    }


def stepsize_sweep(dataset, algo: str, grid=STEPSIZE_GRID, seeds=(0,), smoother: str | None = None,
                   workers: int = 1, **overrides):
    """Iterations to the stopping rule for each ``(alpha0, seed)`` cell.

    Runs that never reach the threshold report the iteration and oracle caps
    the budget allows. Rows come back ordered by ``(alpha0, seed)`` whatever
    the number of worker processes.
    """
    grid = tuple(grid)
    if not grid:
        raise ParameterError("stepsize grid must be non-empty")
    cells = [(dataset, algo, float(a), int(s), overrides, smoother) for a in grid for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(c) for c in cells]
    return rows


def converging_set(rows) -> set:
    """Grid values whose median iteration count over seeds is below the cap.

    Non-converged rows carry the cap, so with an odd number of seeds this is
    a strict majority of converged runs.
    """
    by_alpha: dict = {}
    for r in rows:
        by_alpha.setdefault(r["alpha0"], []).append(r)
    out = set()
    for a, rs in by_alpha.items():
        conv = sum(r["reason"] == "converged" for r in rs)
        if 2 * conv > len(rs):
            out.add(a)
    return out


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for r in rows:
        w.writerow([fmt_float(r["alpha0"]), r["seed"], r["iters"], r["oracles"], fmt_float(r["final_f"]),
                    r["reason"]])
    return buf.getvalue()


def check_compatible(problem_kind: str, algo: str, smoother: str | None):
    """Reject algorithm and smoother pairs that cannot run."""
    if algo == "agls" and problem_kind != "pwq":
        raise CapabilityError("agls needs a convex smoothed objective; use agls-sipp")
    if algo in SMOOTHED_ALGOS and smoother is None:
        return
    if smoother == "softmax" and problem_kind != "pwq":
        raise CapabilityError("softmax smoothing applies to max-of-pieces problems")
    if smoother in ("huber", "moreau") and problem_kind == "pwq":
        raise CapabilityError(f"{smoother} smoothing applies to robust regression")
