"""Command-line interface: ``tsizer analyze | simulate | evaluate``.

Exit status is 0 on success, 1 for usage errors and 2 for runtime errors.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys

from . import io as tio
from .pipeline import analyze
from .render import ascii_map, render_panel
from .scale_space import Kernel, make_bandwidth_grid
from .selection import MODES
from .sim import NOISE_KINDS, NoiseSpec, TrendSpec, gen_noise, gen_trend, run_study

EXIT_USAGE = 1
EXIT_RUNTIME = 2

# Default parameters for each noise family.
NOISE_DEFAULTS = {
    "white": {"sigma": 1.0},
    "ma1": {"sigma": 1.0, "theta": 0.9},
    "fgn": {"sigma": math.sqrt(20.0), "hurst": 0.9},
    "ar2": {"sigma": 1.0, "rho1": 0.97, "phi2": -0.3},
}
NOISE_PARAMS = ("sigma", "theta", "hurst", "phi1", "phi2", "rho1")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment.  Keys use flag names."""
    out = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _grid_args(p):
    g = p.add_argument_group("bandwidth grid")
    g.add_argument("--h-min", type=float, default=2.0, help="smallest bandwidth (default 2)")
    g.add_argument("--h-max", type=float, default=None, help="largest bandwidth (default n/2)")
    g.add_argument("--count", type=int, default=11, help="number of bandwidths, odd (default 11)")
    g.add_argument("--kernel", choices=("gaussian", "uniform"), default="gaussian",
                   help="kernel shape (default gaussian, truncated at 5h)")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    p.add_argument("--mode", choices=MODES, default="robust",
                   help="pilot selection rule (default robust: anchor at pilot 2)")


def _noise_args(p):
    p.add_argument("--params", nargs="*", default=[], metavar="KEY=VALUE",
                   help=f"noise parameters among {', '.join(NOISE_PARAMS)}")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tsizer", description="Significance of trends in time series across scales.")
    parser.add_argument("--config", help="key = value file of defaults; flags override it")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    a = sub.add_parser("analyze", help="full pipeline on a CSV series")
    a.add_argument("csv", help="input file, comma separated, optional header")
    a.add_argument("--column", default=None, help="column name or 0-based index (default last)")
    a.add_argument("--deseasonalize", type=int, default=None, metavar="P",
                   help="remove phase means of period P")
    a.add_argument("--detrend", action="store_true", help="remove the least-squares line")
    a.add_argument("--quantile-mode", choices=("pixel", "row"), default="pixel")
    _grid_args(a)
    a.add_argument("--svg", help="write the panel figure here")
    a.add_argument("--json", help="write the report here")
    a.add_argument("--ascii", action="store_true", help="print the chosen maps as text")

    s = sub.add_parser("simulate", help="write a simulated series as CSV")
    s.add_argument("--trend", choices=("eq7", "eq9", "csv"), required=True)
    s.add_argument("--trend-csv", help="trend samples when --trend csv")
    s.add_argument("--noise", choices=NOISE_KINDS, required=True)
    s.add_argument("--n", type=int, default=None, help="length (default: trend file length or 400)")
    _noise_args(s)
    s.add_argument("--out", required=True)

    e = sub.add_parser("evaluate", help="Monte Carlo type I error and power table")
    e.add_argument("--trend", choices=("eq7", "eq9"), default="eq9")
    e.add_argument("--noise", choices=NOISE_KINDS, required=True)
    e.add_argument("--n", type=int, default=400)
    e.add_argument("--reps", type=int, default=100)
    e.add_argument("--zero-tolerance", type=float, default=0.0,
                   help="true-map slopes this small count as flat (default 0)")
    e.add_argument("--jobs", type=int, default=1)
    _grid_args(e)
    _noise_args(e)
    e.add_argument("--out", required=True)
    return parser


def _noise_spec(kind: str, params: list[str], seed: int) -> NoiseSpec:
    kw = dict(NOISE_DEFAULTS[kind])
    for item in params:
        if "=" not in item:
            raise UsageError(f"noise parameter {item!r} is not KEY=VALUE")
        key, value = item.split("=", 1)
        if key not in NOISE_PARAMS:
            raise UsageError(f"unknown noise parameter {key!r}")
        try:
            kw[key] = float(value)
        except ValueError:
            raise UsageError(f"noise parameter {key} needs a number, got {value!r}") from None
    if "phi1" in kw:
        kw.pop("rho1", None)
    try:
        return NoiseSpec(kind, seed=seed, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _grid(args, n: int):
    try:
        return make_bandwidth_grid(n, args.count, args.h_min, args.h_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _cmd_analyze(args) -> int:
    column = args.column
    series = tio.load_csv(args.csv, column=column)
    steps = []
    if args.deseasonalize is not None:
        steps.append(f"deseasonalize(period={args.deseasonalize})")
    if args.detrend:
        steps.append("linear_detrend")
    series = tio.preprocess(series, args.deseasonalize, args.detrend)
    grid = _grid(args, series.n)
    report = analyze(series, grid, args.alpha, Kernel(args.kernel), args.mode,
                     quantile_mode=args.quantile_mode,
                     meta={"source": str(args.csv), "column": column,
                           "preprocessing": steps, "mode": args.mode,
                           "quantile_mode": args.quantile_mode})
    print(f"n = {series.n}; bandwidths {grid[0]:.4g} .. {grid[-1]:.4g}")
    print("pilot  h_p        IR      n*")
    for k, p in enumerate(report.pilots, start=1):
        mark = "*" if k in report.selection.chosen else " "
        print(f"{mark}{k:>4}  {p.h_p:<9.4g}  {p.ir:.4f}  {p.dep.n_star:.4g}")
    if args.ascii:
        for p, k in zip(report.selected, report.selection.chosen):
            print(f"\nhp({k}) = {p.h_p:.4g}  (top row: largest bandwidth)")
            print(ascii_map(p.map.classes))
    if args.json:
        tio.export_report(report, args.json)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(render_panel(report))
    return 0


def _cmd_simulate(args) -> int:
    noise = _noise_spec(args.noise, args.params, args.seed)
    if args.trend == "csv":
        if not args.trend_csv:
            raise UsageError("--trend csv requires --trend-csv FILE")
        samples = tio.load_csv(args.trend_csv).values
        if args.n is not None and args.n != samples.size:
            raise UsageError(f"--n {args.n} differs from trend file length {samples.size}")
        spec = TrendSpec("custom", samples.size, tuple(samples.tolist()))
    else:
        spec = TrendSpec(args.trend, args.n or 400)
    y = gen_trend(spec) + gen_noise(noise, spec.n)
    tio.write_series_csv(args.out, y)
    return 0


def _cmd_evaluate(args) -> int:
    noise = _noise_spec(args.noise, args.params, args.seed)
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    trend = TrendSpec(args.trend, args.n)
    grid = _grid(args, args.n)
    result = run_study(trend, noise, args.reps, grid, args.alpha, Kernel(args.kernel),
                       args.mode, args.zero_tolerance, jobs=args.jobs)
    rows = result.summary()
    tio.write_study_table(args.out, rows, label=args.noise)
    print(f"{'':5}{'type I: mean':>13}{'median':>8}{'max':>8}{'min':>8}"
          f"{'power: mean':>13}{'median':>8}{'max':>8}{'min':>8}")
    for r in rows:
        print(f"{r['rank']:5}{r['type1_mean']:13.4f}{r['type1_median']:8.4f}{r['type1_max']:8.4f}"
              f"{r['type1_min']:8.4f}{r['power_mean']:13.4f}{r['power_median']:8.4f}"
              f"{r['power_max']:8.4f}{r['power_min']:8.4f}")
    if result.failures:
        print(f"{len(result.failures)} replication(s) failed:", file=sys.stderr)
        for rep, msg in result.failures:
            print(f"  rep {rep}: {msg}", file=sys.stderr)
    return 0


COMMANDS = {"analyze": _cmd_analyze, "simulate": _cmd_simulate, "evaluate": _cmd_evaluate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        if args.config:
            config = _read_config(args.config)
            sub = parser._subparsers._group_actions[0].choices[args.command]
            known = {a.dest for a in sub._actions}
            unknown = sorted(set(config) - known)
            if unknown:
                raise UsageError(f"unknown config keys: {', '.join(unknown)}")
            typed = {}
            for a in sub._actions:
                if a.dest in config:
                    raw = config[a.dest]
                    if a.const is True:
                        typed[a.dest] = raw.lower() in ("1", "true", "yes", "on")
                    else:
                        typed[a.dest] = a.type(raw) if a.type else raw
            sub.set_defaults(**typed)
            args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tsizer: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0)

    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"tsizer: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"tsizer: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
