"""Command-line front end: ``gen``, ``run``, ``sweep``, ``check`` and ``plot``.

Exit codes: 0 success, 1 failed check, 2 usage or configuration error,
3 runtime error.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import CapabilityError, ConvergenceError, ParameterError, WCSmoothError

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

# built-in defaults for options that may also come from a config file
DEFAULTS = {
    "smoother": None,
    "eta": None,
    "alpha0": 0.1,
    "budget": None,
    "seed": 0,
    "batch": None,
    "schedule": "sqrtK",
    "mode": None,
    "L0": 1.0,
    "rho_hat": None,
    "grid": "0.01,0.1,1,10",
    "seeds": "0",
    "workers": 1,
}
_TYPES = {"eta": float, "alpha0": float, "budget": int, "seed": int, "batch": int, "L0": float,
          "rho_hat": float, "workers": int}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def read_config(path) -> dict:
    """``key=value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key=value")
        key, value = (t.strip() for t in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[key] = value
    return out


def resolve(args, keys) -> dict:
    """Flag value if given, else config file value, else built-in default."""
    file_vals = read_config(args.config) if getattr(args, "config", None) else {}
    resolved = {}
    for key in keys:
        flag = getattr(args, key, None)
        if flag is not None:
            val = flag
        elif key in file_vals:
            val = file_vals[key]
        else:
            val = DEFAULTS[key]
        if val is not None and key in _TYPES and not isinstance(val, _TYPES[key]):
            try:
                val = _TYPES[key](val)
            except ValueError as err:
                raise UsageError(f"invalid value for {key}: {val!r}") from err
        resolved[key] = val
    return resolved


def write_resolved(path, values: dict):
    lines = [f"{k}={'' if v is None else v}" for k, v in sorted(values.items())]
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------


def cmd_gen(args):
    from .experiments import gen_piecewise_quadratic, gen_regression, write_dataset

    if args.problem == "robust":
        missing = [f"--{k}" for k in ("kappa", "p", "h") if getattr(args, k) is None]
        if missing:
            args.parser.error(f"--problem robust requires {', '.join(missing)}")
        ds = gen_regression(args.m, args.n, args.kappa, args.p, args.h, args.seed)
        f_star = ds.f_star
    else:
        ds = gen_piecewise_quadratic(args.m, args.n, args.seed)
        f_star = float("nan")
    out = Path(args.out or f"{args.problem}_m{args.m}_n{args.n}_s{args.seed}.txt")
    write_dataset(ds, out)
    print(f"wrote {out}")
    print(f"f(x*) = {f_star:.17g}")
    return EXIT_OK


RUN_KEYS = ("smoother", "eta", "alpha0", "budget", "seed", "batch", "schedule", "mode", "L0", "rho_hat")


def _config_for(ds, algo, opts):
    from .experiments import check_compatible, experiment_config

    check_compatible(ds.kind, algo, opts["smoother"])
    kw = dict(alpha0=opts["alpha0"], seed=opts["seed"], schedule=opts["schedule"], L0=opts["L0"])
    if opts["mode"] is not None:
        kw["experiment_mode"] = opts["mode"] == "benchmark" and algo in ("asgd-sipp", "agls-sipp")
    for key in ("eta", "budget", "rho_hat"):
        if opts[key] is not None:
            kw[key] = opts[key]
    if opts["batch"] is not None:
        kw["batch"] = opts["batch"]
    return experiment_config(ds, algo, **kw)


def cmd_run(args):
    from .experiments import read_dataset, run_experiment
    from .plot import trace_series, write_line_chart

    opts = resolve(args, RUN_KEYS)
    if opts["mode"] not in (None, "benchmark", "theory"):
        raise UsageError("mode must be 'benchmark' or 'theory'")
    ds = read_dataset(args.data)
    config = _config_for(ds, args.algo, opts)
    trace, summary = run_experiment(ds, args.algo, config, opts["smoother"])
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    trace.to_csv(out)
    trace.summary.update({k: summary[k] for k in ("iters", "oracles", "final_f", "reason")})
    trace.summary_csv(out.with_suffix(".summary.csv"))
    write_resolved(out.with_suffix(".config.txt"),
                   {"algo": args.algo, "data": args.data, **opts, "eta_used": trace.config.get("eta"),
                    "budget_used": trace.config.get("budget")})
    if args.plot:
        write_line_chart(out.with_suffix(".svg"), [trace_series(args.algo, trace)],
                         title=f"{args.algo} on {Path(args.data).name}")
    print(f"{args.algo}: iters={summary['iters']} oracles={summary['oracles']} "
          f"final_f={summary['final_f']:.6g} reason={summary['reason']}")
    return EXIT_OK


SWEEP_KEYS = ("smoother", "eta", "budget", "batch", "grid", "seeds", "workers", "mode", "L0", "rho_hat")


def cmd_sweep(args):
    from .experiments import check_compatible, read_dataset, stepsize_sweep, sweep_csv

    opts = resolve(args, SWEEP_KEYS)
    try:
        grid = [float(t) for t in str(opts["grid"]).split(",") if t.strip()]
        seeds = [int(t) for t in str(opts["seeds"]).split(",") if t.strip()]
    except ValueError as err:
        raise UsageError(f"bad grid or seed list: {err}") from err
    if not grid or not seeds:
        raise UsageError("grid and seeds must be non-empty")
    ds = read_dataset(args.data)
    check_compatible(ds.kind, args.algo, opts["smoother"])
    overrides = {k: opts[k] for k in ("eta", "budget", "batch", "rho_hat") if opts[k] is not None}
    overrides["L0"] = opts["L0"]
    if args.algo in ("asgd-sipp", "agls-sipp") and opts["mode"] is not None:
        overrides["experiment_mode"] = opts["mode"] == "benchmark"
    rows = stepsize_sweep(ds, args.algo, grid, seeds, opts["smoother"], opts["workers"], **overrides)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(sweep_csv(rows))
    write_resolved(out.with_suffix(".config.txt"), {"algo": args.algo, "data": args.data, **opts})
    print(f"wrote {out} ({len(rows)} rows)")
    return EXIT_OK


def cmd_check(args):
    from .checks import run_suite

    results = run_suite(args.suite)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}")
        return EXIT_CHECK
    print(f"all {len(results)} properties passed")
    return EXIT_OK


def cmd_plot(args):
    from .plot import trace_series, write_line_chart
    from .solvers.trace import Trace

    series = []
    for spec in args.traces:
        label, _, path = spec.rpartition("=")
        label = label or Path(path).stem
        series.append(trace_series(label, Trace.from_csv(path), x=args.x))
    write_line_chart(args.out, series, title=args.title or "", xlabel=args.x)
    print(f"wrote {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    from .solvers.config import ALGOS

    p = _Parser(prog="wcsmooth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a benchmark dataset file")
    g.add_argument("--problem", choices=("robust", "pwq"), required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--kappa", type=float)
    g.add_argument("--p", type=float)
    g.add_argument("--h", choices=("quad", "quintic", "exp"))
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen, parser=g)

    def common(sp):
        sp.add_argument("--data", required=True)
        sp.add_argument("--algo", choices=ALGOS, required=True)
        sp.add_argument("--smoother", choices=("huber", "softmax", "moreau"))
        sp.add_argument("--eta", type=float)
        sp.add_argument("--budget", type=int)
        sp.add_argument("--batch", type=int)
        sp.add_argument("--mode", choices=("benchmark", "theory"))
        sp.add_argument("--L0", type=float)
        sp.add_argument("--rho-hat", dest="rho_hat", type=float)
        sp.add_argument("--config", help="key=value file; flags take precedence")
        sp.add_argument("--out", required=True)

    r = sub.add_parser("run", help="run one solver and write its trace")
    common(r)
    r.add_argument("--alpha0", type=float)
    r.add_argument("--seed", type=int)
    r.add_argument("--schedule", choices=("constant", "sqrtK", "theory"))
    r.add_argument("--plot", action="store_true", help="also write an SVG of f(x^k)")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="iterations to the stopping rule over a stepsize grid")
    common(s)
    s.add_argument("--grid", help="comma-separated alpha0 values")
    s.add_argument("--seeds", help="comma-separated seeds")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("check", help="run property suites")
    c.add_argument("--suite", choices=("gradients", "sandwich", "prox", "rates", "all"), required=True)
    c.set_defaults(func=cmd_check)

    pl = sub.add_parser("plot", help="plot trace CSVs as one SVG")
    pl.add_argument("traces", nargs="+", help="label=trace.csv or trace.csv")
    pl.add_argument("--out", required=True)
    pl.add_argument("--x", choices=("k", "oracle_count"), default="k")
    pl.add_argument("--title")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE
    except (ParameterError, CapabilityError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ConvergenceError, WCSmoothError, OSError, ValueError) as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
