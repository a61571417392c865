"""Command line entry point ``sim``.

Exit codes: 0 success, 2 configuration error, 3 runtime abort.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..model import ModelError
from .config import ConfigError, echo_config, load_config, symbol_table, validate_scenario
from .sweep import RUNTIME_ERRORS

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

logger = logging.getLogger("dirac_selection")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", metavar="DIR", help="output directory (overrides outputs.dir)")
    p.add_argument("--threads", type=int, default=1, metavar="N", help="worker processes for sweeps")
    p.add_argument("--echo-config", action="store_true",
                   help="print the resolved config with its symbol table")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check model assumptions for a config")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("simulate", help="run the epsilon system")
    p.add_argument("config")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--dump-fields", action="store_true", help="also write the full u field")
    _common(p)

    p = sub.add_parser("limit", help="run the limit system")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("sweep", help="eps sweep against the limit system")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("plot", help="draw SVG figures from a sweep directory")
    p.add_argument("reportdir")
    _common(p)
    return parser


def _run(args) -> int:
    from . import io

    if args.command == "plot":
        from .plots import emit_plots, load_report_dir
        report, trajectories = load_report_dir(args.reportdir)
        written = emit_plots(report, trajectories, args.out or args.reportdir)
        for w in written:
            print(w)
        return EXIT_OK

    scenario = load_config(args.config, validate=args.command != "validate")
    if args.echo_config:
        print(echo_config(scenario))
        print(symbol_table(scenario), file=sys.stderr)
    out = Path(args.out or scenario.out_dir)
    g = scenario.grids

    if args.command == "validate":
        report = validate_scenario(scenario)
        print(report.format())
        return EXIT_OK if report.ok else EXIT_CONFIG

    if args.command == "simulate":
        from ..epsilon_solver import run_epsilon
        snaps = run_epsilon(scenario.params, scenario.init, g, args.eps, scenario.snapshot_times(),
                            scenario.picard, scenario.time_convention, scenario.forcing)
        path = io.write_epsilon_csv(out / io.eps_filename(args.eps), g.y, snaps)
        print(path)
        if args.dump_fields:
            print(io.write_fields_csv(out / f"fields_eps_{args.eps:g}.csv", g.y, g.x, snaps))
        flagged = sum(m.bound_violations for _, m in snaps)
        print(f"snapshots: {len(snaps)}, bound violations flagged: {flagged}")
        return EXIT_OK

    if args.command == "limit":
        from ..limit_solver import run_limit
        run = run_limit(scenario.params, scenario.init, g, scenario.snapshot_times(), scenario.picard)
        print(io.write_limit_csv(out / "limit.csv", g.y, run))
        print(f"max constraint residual (relative): {run.max_constraint_rel:.3e}")
        return EXIT_OK

    if args.command == "sweep":
        from .sweep import run_sweep
        report = run_sweep(scenario, threads=args.threads, out_dir=out)
        sys.stdout.write(report.summary())
        return EXIT_RUNTIME if report.aborted else EXIT_OK
    raise AssertionError(args.command)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (ConfigError, ModelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RUNTIME_ERRORS as exc:
        print(f"runtime abort: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
