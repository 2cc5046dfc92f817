"""Command-line entry point: ``underlay-ber run --config sweep.toml``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure at one or
more grid points, 3 I/O error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from typing import Optional, Sequence

from .kernels import BACKEND
from .sweep import ConfigError, gnuplot_script, load_config, run_sweep, write_csv

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_IO = 3

log = logging.getLogger("underlay_ber")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="underlay-ber",
        description="Analytic and Monte-Carlo BER sweeps for underlay DF multi-hop links.",
    )
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="evaluate a sweep configuration and write CSV")
    run.add_argument("--config", required=True, help="TOML sweep configuration")
    run.add_argument("--output", help="CSV path (overrides the config 'output')")
    run.add_argument("--seed", type=int, help="unsigned 64-bit simulation seed")
    mode = run.add_mutually_exclusive_group()
    mode.add_argument("--analytic-only", action="store_true", help="skip the simulator")
    mode.add_argument("--sim-only", action="store_true", help="skip the closed form")
    run.add_argument("--gnuplot", metavar="PATH", help="also write a gnuplot script")
    run.add_argument("--workers", type=int, default=1, help="grid points evaluated concurrently")
    run.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            print("config error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
            return EXIT_CONFIG
        cfg = replace(cfg, seed=args.seed)
    output = args.output or cfg.output_path
    log.info("kernel backend: %s; %d grid points", BACKEND, len(cfg.grid()))

    rows = run_sweep(
        cfg,
        analytic=not args.sim_only,
        simulate=not args.analytic_only,
        workers=args.workers,
    )
    try:
        write_csv(rows, output)
        if args.gnuplot:
            with open(args.gnuplot, "w", encoding="utf-8") as fh:
                fh.write(gnuplot_script(rows, output))
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    failed = [r for r in rows if r.failed()]
    if failed:
        print(f"{len(failed)} grid point(s) failed; see the status column", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
