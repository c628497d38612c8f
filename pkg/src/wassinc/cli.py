"""Command line entry point.

    wassinc simulate|peano|filippov|relax|verify --config <file.json> --out <dir>
            [--seed <u64>] [--particles <N>] [--steps <M>] [--p <real>]

The command selects (and overrides) the experiment kind declared in the
config; the optional flags override the corresponding config values.
Exit codes: 0 all verdicts pass, 1 some verdict failed, 2 configuration
or runtime error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import EXPERIMENT_KINDS, load_config
from .errors import ConfigError
from .runner import run_scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wassinc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS:
        cmd = sub.add_parser(kind, help=f"run the {kind} experiment")
        cmd.add_argument("--config", required=True, help="scenario JSON file")
        cmd.add_argument("--out", required=True, help="output directory")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--particles", type=int, default=None)
        cmd.add_argument("--steps", type=int, default=None)
        cmd.add_argument("--p", type=float, default=None)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        experiment = dict(config.experiment)
        experiment["kind"] = args.command
        overrides = {"experiment": experiment}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.particles is not None:
            overrides["N"] = args.particles
        if args.steps is not None:
            overrides["grid"] = {"steps": args.steps}
        if args.p is not None:
            overrides["p"] = args.p
        config = dataclasses.replace(config, **overrides)
        manifest = run_scenario(config, args.out)
    except (ConfigError, OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    verdicts = manifest.get("verdicts", {})
    for name, ok in verdicts.items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    return 0 if all(verdicts.values()) else 1


if __name__ == "__main__":
    sys.exit(main())
