"""Command-line entry point.

    biphoton-g2 run --scenario fig2b --out out/fig2b
    biphoton-g2 estimate-k2 --hist out/dispersion/hist_synthetic.txt --config fibre.cfg

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import SCENARIOS, load_config
from .dispersion import estimate_dispersion
from .errors import ConfigurationError, NumericalError
from .fileio import format_value, read_histogram, write_summary
from .scenarios import estimate_record, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

log = logging.getLogger("biphoton_g2")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="biphoton-g2", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a named scenario")
    run.add_argument("--scenario", required=True, choices=SCENARIOS)
    run.add_argument("--config", help="flat 'block.key = value' configuration file")
    run.add_argument("--out", help="output directory (overrides output.dir)")
    run.add_argument("--seed", type=int, help="master RNG seed (overrides events.seed)")
    run.add_argument("--emit", help="comma list of curves,hist,summary")

    est = sub.add_parser("estimate-k2", help="estimate fibre k'' from a no-polarizer histogram")
    est.add_argument("--hist", required=True, help="histogram file")
    est.add_argument("--config", required=True, help="configuration with source, fibre.z and jitter")
    est.add_argument("--out", help="write summary.txt into this directory")
    return p


def _print_record(record) -> None:
    for key, value in record.items():
        print(f"{key} = {format_value(value)}")


def _run(args) -> int:
    cfg = load_config(args.config, scenario=args.scenario, out_dir=args.out,
                      seed=args.seed, emit=args.emit)
    log.info("running %s into %s", cfg.name, cfg.out_dir)
    _print_record(run_scenario(cfg))
    return EXIT_OK


def _estimate(args) -> int:
    cfg = load_config(args.config, out_dir=args.out)
    hist = read_histogram(Path(args.hist))
    est = estimate_dispersion(hist, cfg.source, cfg.fibre.length_z, cfg.jitter,
                              cfg.k2_bracket, cfg.log_tol)
    record = {"scenario": "estimate-k2", "histogram": args.hist, **estimate_record(est)}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        write_summary(out / "summary.txt", record)
    _print_record(record)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args) if args.command == "run" else _estimate(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
