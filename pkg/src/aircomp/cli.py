"""Command-line front end: `aircomp-sim run|validate|list-experiments`.

Exit codes: 0 success, 1 config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .errors import AirCompError, ConfigError
from .harness import (
    ENV_PREFIX,
    SCHEMAS,
    expected_records_per_trial,
    finalize_run,
    load_config,
    run_experiment,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aircomp-sim",
        description="Run over-the-air computation experiments from declarative configs.",
        epilog=f"Any config key can be overridden via environment variables named {ENV_PREFIX}<KEY>.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute a config and export its records")
    run.add_argument("config", help="path to the config file")
    run.add_argument("--trials", type=int, default=None, help="override num_trials")
    run.add_argument("--seed", type=int, default=None, help="override the master seed")
    run.add_argument("--out", default=None, help="override the output path")
    run.add_argument("--format", choices=("csv", "jsonl"), default="csv", help="export format")
    run.add_argument("--workers", type=int, default=1, help="parallel trial workers")
    run.add_argument("--no-resume", action="store_true", help="ignore any trial journal")

    validate = sub.add_parser("validate", help="parse and validate a config, then stop")
    validate.add_argument("config", help="path to the config file")

    sub.add_parser("list-experiments", help="list experiment kinds and their keys")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.trials is not None:
        config = replace(config, num_trials=args.trials)
    if args.out is not None:
        config = replace(config, output_path=args.out)
    if config.output_path is None:
        config = replace(config, output_path=f"{config.experiment_kind}_results.{args.format}")
    records = run_experiment(config, workers=args.workers, resume=not args.no_resume)
    path = finalize_run(config, records, args.format)
    print(f"wrote {len(records)} records ({config.num_trials} trials) to {path}")
    return 0


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    print(
        f"valid {config.experiment_kind} config: seed={config.seed}, "
        f"num_trials={config.num_trials}, {expected_records_per_trial(config)} records/trial"
    )
    for key in sorted(config.parameters):
        print(f"  {key} = {config.parameters[key]}")
    return 0


def _cmd_list() -> int:
    for kind in sorted(SCHEMAS):
        print(kind)
        for key, spec in SCHEMAS[kind].items():
            marker = "required" if spec.required else f"default {spec.default!r}"
            print(f"  {key:<24} {marker:<20} {spec.help}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_list()
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except AirCompError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
