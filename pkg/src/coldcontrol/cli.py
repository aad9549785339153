"""Command-line entry point."""
from __future__ import annotations

import argparse
import os
import sys

from .config import load_config, parse_assignment, resolve
from .container import save_container
from .errors import ConfigError, ConvergenceFailure, DomainError, InvalidArgument, LineSearchFailure
from .scenarios import DESCRIPTIONS, run_scenario, scenario_ids

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coldcontrol", description="Simulate and optimize cold-atom control problems.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario")
    run.add_argument("config", nargs="?", help="JSON configuration file")
    run.add_argument("--scenario", help="scenario id (instead of a configuration file)")
    run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a parameter")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--seed", type=int, help="random seed for randomized bases")
    run.add_argument("--quiet", action="store_true", help="suppress per-iteration output")

    sub.add_parser("list-scenarios", help="list available scenarios")

    val = sub.add_parser("validate", help="check a configuration file")
    val.add_argument("config")
    return parser


def _raw_config(args) -> dict:
    if args.config and args.scenario:
        raise ConfigError("give either a configuration file or --scenario", "--scenario")
    if args.config:
        raw = load_config(args.config)
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object", "$")
    elif args.scenario:
        raw = {"scenario": args.scenario}
    else:
        raise ConfigError("a configuration file or --scenario is required", "config")
    overrides = dict(raw.get("overrides", {})) if isinstance(raw.get("overrides", {}), dict) else raw["overrides"]
    for item in args.set:
        key, value = parse_assignment(item)
        overrides[key] = value
    if args.quiet and isinstance(overrides, dict):
        overrides["verbose"] = False
    raw = {**raw, "overrides": overrides}
    if args.seed is not None:
        raw["seed"] = args.seed
    return raw


def _run(args) -> int:
    scenario, cfg = resolve(_raw_config(args))
    try:
        dc, status = run_scenario(scenario, cfg)
    except (InvalidArgument, DomainError) as exc:
        raise ConfigError(str(exc), "overrides") from exc
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{scenario}.json")
    save_container(dc, path)
    print(f"wrote {path}")
    print(f"status: {status}")
    return EXIT_OK if status == "ok" else EXIT_CONVERGENCE if status == "line-search-failure" else EXIT_RUNTIME


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list-scenarios":
            for sid in scenario_ids():
                print(f"{sid}\t{DESCRIPTIONS[sid]}")
            return EXIT_OK
        if args.command == "validate":
            scenario, _ = resolve(load_config(args.config))
            print(f"{args.config}: valid ({scenario})")
            return EXIT_OK
        return _run(args)
    except ConfigError as exc:
        print(f"config-error at {exc.path}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConvergenceFailure, LineSearchFailure) as exc:
        print(f"convergence-failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except OSError as exc:
        print(f"io-error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
