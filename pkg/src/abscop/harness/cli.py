"""Command-line entry point: ``abscop simulate|analyze|presets|report``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..engine import ConfigurationError
from .config import ConfigError, apply_env, list_presets, load_config, scale_to_full
from .io import format_table, read_aggregates, write_results
from .study import IngestionError, run_real_data, run_study

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_IO = 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="abscop", description="Approximate Bayesian inference for copula functionals.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a seeded simulation study")
    sim.add_argument("config", help="YAML config file or shipped preset name")
    sim.add_argument("--full-scale", action="store_true", help="use R=500 repetitions of size n=1000")
    sim.add_argument("--repetitions", type=int, help="override the number of repetitions")
    sim.add_argument("--output-dir", help="override the output directory")
    sim.add_argument("--workers", type=int, help="override the number of worker processes")

    ana = sub.add_parser("analyze", help="analyse a CSV data set")
    ana.add_argument("csv", help="data file with a header row")
    ana.add_argument("config", help="YAML config file or shipped preset name")
    ana.add_argument("--output-dir", help="override the output directory")

    pre = sub.add_parser("presets", help="shipped study designs")
    pre.add_argument("action", choices=["list"])

    rep = sub.add_parser("report", help="print the aggregate table of a result directory")
    rep.add_argument("result_dir")
    return p


def _finish_config(cfg, args):
    cfg = apply_env(cfg)
    changes = {}
    if getattr(args, "repetitions", None) is not None:
        changes["repetitions"] = args.repetitions
    if getattr(args, "workers", None) is not None:
        changes["workers"] = args.workers
    if getattr(args, "output_dir", None):
        changes["output_dir"] = args.output_dir
    for name in ("repetitions", "workers"):
        if name in changes and changes[name] < 1:
            raise ConfigError(name, f"must be >= 1, got {changes[name]}")
    return cfg.replace(**changes) if changes else cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "presets":
            for name, desc in list_presets().items():
                print(f"{name:28s} {desc}")
            return EXIT_OK
        if args.command == "report":
            print(format_table(read_aggregates(args.result_dir)))
            return EXIT_OK
        if args.command == "simulate":
            cfg = load_config(args.config)
            if args.full_scale:
                cfg = scale_to_full(cfg)
            cfg = _finish_config(cfg, args)
            result = run_study(cfg)
        else:
            cfg = _finish_config(load_config(args.config, require_truth=False), args)
            result = run_real_data(args.csv, cfg)
        out = write_results(result, cfg.output_dir)
        print(format_table(result.aggregates))
        if result.failures:
            print(f"{len(result.failures)} component run(s) failed; see {out / 'metadata.json'}", file=sys.stderr)
        print(f"results written to {out}", file=sys.stderr)
        return EXIT_OK
    except (ConfigError, ConfigurationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestionError as exc:
        print(f"ingestion error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
