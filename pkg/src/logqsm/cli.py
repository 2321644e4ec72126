"""Command-line interface: ``logqsm {qsm,admissible,sweep,simulate,limits}``.

Exit status: 0 success, 1 configuration error, 2 numerical
non-convergence, 3 insufficient survivors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .admissibility import is_admissible
from .discretization import DEFAULT_CELLS, Density
from .errors import ConvergenceError, InsufficientSurvivorsError, UnderflowError
from .kernel import LogisticParams
from .montecarlo import SimConfig, estimate_survival_rate, simulate, yaglom_distance
from .spectral import conditioned_time_average, empirical_gap, solve, yaglom_ratio
from .truncated import epsilon_sweep

log = logging.getLogger("logqsm")

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE, EXIT_SURVIVORS = 0, 1, 2, 3


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def parse_observable(spec: str, eta_file=None):
    """Observable from the menu ``1 | y | y2 | indicator:l:r | eta``."""
    s = spec.strip().lower()
    if s == "1":
        return lambda y: np.ones_like(np.asarray(y, dtype=float))
    if s == "y":
        return lambda y: np.asarray(y, dtype=float)
    if s in ("y2", "y^2", "y²"):
        return lambda y: np.asarray(y, dtype=float) ** 2
    if s.startswith("indicator"):
        body = s[len("indicator"):].strip("[]():")
        try:
            lo, hi = (float(v) for v in body.replace(",", ":").split(":"))
        except ValueError:
            raise ConfigError(f"bad indicator spec {spec!r}; use indicator:l:r") from None
        if not 0.0 <= lo < hi <= 1.0:
            raise ConfigError(f"indicator bounds must satisfy 0 <= l < r <= 1, got {lo}, {hi}")
        return lambda y: ((np.asarray(y) >= lo) & (np.asarray(y) <= hi)).astype(float)
    if s == "eta":
        if eta_file is None:
            raise ConfigError("observable 'eta' needs --eta-file")
        _, eta, _ = io.read_spectral(eta_file)
        return eta
    raise ConfigError(f"unknown observable {spec!r}; choose 1, y, y2, indicator:l:r or eta")


def _params(args):
    try:
        return LogisticParams(args.a, args.b)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _check(cond, message):
    if not cond:
        raise ConfigError(message)


def cmd_qsm(args):
    params = _params(args)
    _check(args.n >= 2, f"--n must be >= 2, got {args.n}")
    _check(args.tol > 0, "--tol must be positive")
    result = solve(params, args.n, args.tol, args.max_iter, threads=args.threads, cache_dir=args.cache)
    csv_path, json_path = io.write_spectral(result, args.out)
    line = f"lambda={io.fmt(result.lam)} m={result.m} residual={io.fmt(result.residual)}"
    if args.gap:
        ratio = empirical_gap(result.forward)
        io.write_json(json_path, {**result.header(), "gap_ratio": ratio})
        line += f" gap_ratio={io.fmt(ratio)}"
    print(line)
    return EXIT_OK


def cmd_admissible(args):
    params = _params(args)
    _check(args.probes >= 2, f"--probes must be >= 2, got {args.probes}")
    report = is_admissible(params, args.probes, args.tolerance)
    io.write_json(Path(args.out) / "admissible.json", report.to_dict())
    print(report.summary())
    return EXIT_OK


def cmd_sweep(args):
    params = _params(args)
    _check(args.n >= 2, f"--n must be >= 2, got {args.n}")
    eps = list(args.eps)
    _check(all(0 < e < 0.375 for e in eps), "every --eps value must lie in (0, 3/8)")
    _check(all(b < a for a, b in zip(eps, eps[1:])), "--eps must be strictly decreasing")
    from .discretization import build_grid

    sweep = epsilon_sweep(params, build_grid(args.n), eps, args.tol, args.max_iter, threads=args.threads)
    io.write_sweep(sweep, args.out)
    io.write_json(
        Path(args.out) / "sweep.json",
        {
            "a": params.a,
            "b": params.b,
            "n": args.n,
            "lambda_full": sweep.lam_full,
            "entries": [
                {
                    "epsilon": e.epsilon,
                    "lambda_eps": e.lambda_eps,
                    "gap_to_full": sweep.lam_full - e.lambda_eps,
                    "cdf_distance_to_full": e.cdf_distance_to_full,
                    "iterations": e.iterations,
                    "error": e.error,
                }
                for e in sweep
            ],
        },
    )
    for e in sweep:
        print(f"eps={io.fmt(e.epsilon)} lambda_eps={io.fmt(e.lambda_eps)} "
              f"cdf_distance={io.fmt(e.cdf_distance_to_full)}" + (f" error={e.error}" if e.error else ""))
    print(f"lambda_full={io.fmt(sweep.lam_full)}")
    return EXIT_CONVERGENCE if any(e.error for e in sweep) else EXIT_OK


def cmd_simulate(args):
    params = _params(args)
    _check(args.paths >= 1, "--paths must be >= 1")
    _check(args.horizon >= 1, "--horizon must be >= 1")
    _check(0.0 < args.start < 1.0, "--start must lie in (0, 1)")
    lo, hi = args.window if args.window else (args.horizon // 2, args.horizon)
    _check(0 <= lo < hi <= args.horizon, f"--window {lo} {hi} must lie inside [0, horizon]")
    if args.reference_n:
        _check(args.reference_n % args.bins == 0, "--reference-n must be a multiple of --bins")
    observable = parse_observable(args.observable, args.eta_file)
    config = SimConfig(params, args.paths, args.horizon, args.seed, args.start, args.bins, args.threads)
    stats = simulate(config, observable)
    lam_hat, stderr = estimate_survival_rate(stats, (lo, hi))
    summary = {
        "a": params.a,
        "b": params.b,
        "paths": args.paths,
        "horizon": args.horizon,
        "seed": args.seed,
        "start": args.start,
        "bins": args.bins,
        "window": [lo, hi],
        "observable": args.observable,
        "survivors": stats.n_survivors,
        "lambda_hat": lam_hat,
        "lambda_hat_stderr": stderr,
        "time_average_mean": stats.time_average_mean,
        "time_average_stderr": stats.time_average_stderr,
        "tv_distance": None,
        "lambda_spectral": None,
    }
    if args.reference_n:
        ref = solve(params, args.reference_n, threads=args.threads)
        summary["tv_distance"] = yaglom_distance(stats, ref.g)
        summary["lambda_spectral"] = ref.lam
    io.write_stats(stats, args.out, summary)
    print(f"lambda_hat={io.fmt(lam_hat)} stderr={io.fmt(stderr)} survivors={stats.n_survivors}"
          + (f" tv_distance={io.fmt(summary['tv_distance'])}" if summary["tv_distance"] is not None else ""))
    return EXIT_OK


def cmd_limits(args):
    params = _params(args)
    _check(args.n >= 2, f"--n must be >= 2, got {args.n}")
    _check(all(0 < x < 1 for x in args.x), "every --x must lie in (0, 1)")
    _check(args.steps >= 0 and args.ergodic_steps >= 1, "--steps >= 0 and --ergodic-steps >= 1 required")
    h = parse_observable(args.h, args.eta_file)
    result = solve(params, args.n, args.tol, args.max_iter, threads=args.threads, cache_dir=args.cache)
    if isinstance(h, Density) and h.grid != result.grid:
        raise ConfigError(f"--eta-file has {h.grid.n_cells} cells but --n is {args.n}")
    P = result.forward
    rows = []
    for x in args.x:
        rows.append((
            x,
            yaglom_ratio(P, h, args.steps, x),
            conditioned_time_average(P, result.lam_forward, h, args.ergodic_steps, x),
        ))
    io.write_csv(Path(args.out) / "limits.csv", ["x", "yaglom_ratio", "time_average"], rows)
    targets = {"integral_h_g": result.integrate(h), "integral_h_nu": result.integrate(h, "nu")}
    io.write_json(
        Path(args.out) / "limits.json",
        {**result.header(), "h": args.h, "steps": args.steps, "ergodic_steps": args.ergodic_steps, **targets},
    )
    for x, yr, ta in rows:
        print(f"x={io.fmt(x)} yaglom_ratio={io.fmt(yr)} time_average={io.fmt(ta)}")
    print(f"integral_h_g={io.fmt(targets['integral_h_g'])} integral_h_nu={io.fmt(targets['integral_h_nu'])}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--threads", type=int, default=1, help="cap on internal worker threads")
    common.add_argument("--log-level", default="WARNING")

    ab = argparse.ArgumentParser(add_help=False)
    ab.add_argument("--a", type=float, required=True, help="lower noise endpoint, 0 < a < 4")
    ab.add_argument("--b", type=float, required=True, help="upper noise endpoint, b > 4")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tol", type=float, default=1e-10)
    solver.add_argument("--max-iter", type=int, default=100_000)

    parser = _Parser(prog="logqsm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("qsm", parents=[common, ab, solver], help="quasi-stationary density, eta and nu")
    p.add_argument("--n", type=int, default=DEFAULT_CELLS, help="grid cells")
    p.add_argument("--cache", default=None, help="directory for cached operator matrices")
    p.add_argument("--gap", action="store_true", help="also report the empirical |lambda_2|/lambda ratio")
    p.set_defaults(func=cmd_qsm)

    p = sub.add_parser("admissible", parents=[common, ab], help="admissible-pair verdict")
    p.add_argument("--probes", type=int, default=512)
    p.add_argument("--tolerance", type=float, default=1e-12)
    p.set_defaults(func=cmd_admissible)

    p = sub.add_parser("sweep", parents=[common, ab, solver], help="truncated-chain epsilon sweep")
    p.add_argument("--n", type=int, default=DEFAULT_CELLS)
    p.add_argument("--eps", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.02, 0.01])
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", parents=[common, ab], help="Monte Carlo of absorbed paths")
    p.add_argument("--paths", type=int, default=1_000_000)
    p.add_argument("--horizon", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--start", type=float, default=0.3)
    p.add_argument("--bins", type=int, default=200)
    p.add_argument("--window", type=int, nargs=2, default=None, metavar=("LO", "HI"))
    p.add_argument("--observable", default="y", help="1, y, y2, indicator:l:r or eta")
    p.add_argument("--eta-file", default=None)
    p.add_argument("--reference-n", type=int, default=0,
                   help="grid cells for a spectral reference (0 skips the TV distance)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("limits", parents=[common, ab, solver], help="exact Yaglom and quasi-ergodic limits")
    p.add_argument("--n", type=int, default=DEFAULT_CELLS, help="grid cells")
    p.add_argument("--x", type=float, nargs="+", default=[0.1, 0.3, 0.5, 0.7, 0.9])
    p.add_argument("--h", default="y", help="1, y, y2, indicator:l:r or eta")
    p.add_argument("--eta-file", default=None)
    p.add_argument("--steps", type=int, default=200, help="Yaglom horizon")
    p.add_argument("--ergodic-steps", type=int, default=400, help="time-average horizon")
    p.add_argument("--cache", default=None)
    p.set_defaults(func=cmd_limits)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        return args.func(args)
    except ConfigError as exc:
        print(f"logqsm {args.command}: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"logqsm {args.command}: not converged after {exc.iterations} iterations, "
              f"residual={io.fmt(exc.residual)}: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (InsufficientSurvivorsError, UnderflowError) as exc:
        print(f"logqsm {args.command}: insufficient survivors: {exc}", file=sys.stderr)
        return EXIT_SURVIVORS


if __name__ == "__main__":
    sys.exit(main())
