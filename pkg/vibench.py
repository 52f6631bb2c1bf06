#!/usr/bin/env python3
"""
vibench - Benchmark harness for projection methods on monotone variational inequalities

Runs the inertial projection method with Armijo line search and the
subgradient extragradient baselines on the exponential, Nash-Cournot,
Harker-Pang and Volterra problem families, writing per-run CSV traces and
summary tables.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

from modules.acceptance import run_acceptance
from modules.bench import gamma_sweep, run_experiment
from modules.config import LoggingConfig, load_config, parse_seed_range
from modules.core import ConfigError
from modules.logger import setup_logging

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_NOT_CONVERGED = 2
EXIT_INVARIANT_VIOLATION = 3
EXIT_CONFIG_ERROR = 4


class ViBench:
    """Loads an experiment, applies command-line overrides and runs it."""

    def __init__(self, config_path: Optional[str] = None, log_level: Optional[str] = None,
                 output_dir: Optional[str] = None, mode: Optional[str] = None,
                 timings: bool = True):
        self.config = load_config(config_path)
        if mode:
            self.config = self.config.with_mode(mode)
        if not timings:
            self.config = replace(self.config, timings=False)
        self.output_dir = Path(output_dir or self.config.output_dir)
        self.logger = setup_logging(self.config.logging, log_level)
        self.logger.info(f"vibench initialized: {self.config.problem.family} with "
                         f"{', '.join(m.display_name for m in self.config.methods)}")

    def run(self) -> int:
        report = run_experiment(self.config, self.output_dir)
        print(report.table, end="")
        self.logger.info(f"Artifacts written to {report.output_dir}")
        return exit_code(report.violations, report.failures)

    def sweep(self, seeds: Optional[List[int]] = None, gammas: Optional[List[float]] = None) -> int:
        if seeds:
            self.config = self.config.with_seeds(seeds)
        if gammas:
            self.config = gamma_sweep(self.config, gammas)
        return self.run()


def parse_gammas(text: str) -> List[float]:
    try:
        return [float(g) for g in text.split(",")]
    except ValueError:
        raise ConfigError(f"gammas: cannot parse '{text}'") from None


def exit_code(violations: int, failures: int) -> int:
    if violations:
        return EXIT_INVARIANT_VIOLATION
    if failures:
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def run_check(args) -> int:
    """Run the acceptance criteria and print a ✓/✗ line per criterion."""
    setup_logging(LoggingConfig(level=args.log_level or "WARNING"))
    try:
        selected = [int(c) for c in args.criteria.split(",")] if args.criteria else None
    except ValueError:
        raise ConfigError(f"criteria: cannot parse '{args.criteria}'") from None
    results = run_acceptance(selected, workers=args.workers)
    for result in results:
        mark = "✓" if result.passed else "✗"
        print(f"{mark} [{result.number}] {result.title}: {result.detail} ({result.seconds:.1f}s)")
    passed = sum(r.passed for r in results)
    print(f"\n{passed}/{len(results)} acceptance checks passed")
    return EXIT_OK if passed == len(results) else EXIT_INVARIANT_VIOLATION


def main():
    """Main entry point."""
    parser = argparse.ArgumentParser(description="vibench - variational inequality solver benchmark")
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=None,
                        help="Override the configured log level (DEBUG, INFO, ...)")

    experiment = argparse.ArgumentParser(add_help=False, parents=[common])
    experiment.add_argument("--config", "-c", default=None,
                            help="Experiment file (JSON or YAML) or directory")
    experiment.add_argument("--out", default=None, help="Output directory for traces and summaries")
    experiment.add_argument("--mode", choices=("checked", "fast"), default=None,
                            help="Invariant checking mode")
    experiment.add_argument("--no-timings", action="store_true",
                            help="Leave timing columns empty so artifacts are byte-reproducible")

    subparsers.add_parser("run", parents=[experiment], help="Run one experiment config")
    sweep = subparsers.add_parser("sweep", parents=[experiment],
                                  help="Run a config over a seed range and/or line-search factors")
    sweep.add_argument("--seeds", default=None, help="Seed range A..B (inclusive)")
    sweep.add_argument("--gammas", default=None,
                       help="Comma-separated line-search factors, e.g. 0.01,0.1,0.5,0.8")
    check = subparsers.add_parser("check", parents=[common], help="Run the acceptance criteria")
    check.add_argument("--criteria", default=None, help="Comma-separated criterion numbers (default: all)")
    check.add_argument("--workers", type=int, default=None, help="Worker processes per sweep")

    args = parser.parse_args()

    try:
        if args.command == "check":
            return run_check(args)

        bench = ViBench(args.config, args.log_level, args.out, args.mode, timings=not args.no_timings)
        if args.command == "sweep":
            seeds = parse_seed_range(args.seeds) if args.seeds else None
            gammas = parse_gammas(args.gammas) if args.gammas else None
            return bench.sweep(seeds, gammas)
        return bench.run()

    except ConfigError as e:
        print(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR
    except Exception as e:
        print(f"Fatal error: {e}")
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
