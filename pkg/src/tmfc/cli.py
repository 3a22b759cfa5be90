"""Command-line entry point.

Verbs mirror the tasks: kernel, decompose, prepare, gate-solve, sweep. The
verb overrides the ``task`` field of the config file, so one config can
drive several verbs. ``--set key=value`` edits the raw JSON tree before
validation and may be repeated.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import TASKS, parse_config, parse_config_mapping
from .errors import SimulationError
from .runner import run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tmfc",
        description="Temporal-mode frequency-conversion simulator: kernels, "
        "Schmidt modes, qubit preparation fidelity, Pauli-gate solving and sweeps.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in TASKS:
        p = sub.add_parser(verb, help=f"run the {verb} task")
        p.add_argument("--config", required=True, help="path to the JSON run configuration")
        p.add_argument("--out", default=None, help="output directory (default: config output_dir)")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config entry by dotted path, e.g. "
            "--set waveguide.length.value=0.02 (repeatable)",
        )
        p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = list(args.overrides) + [f"task=\"{args.verb}\""]
    try:
        config = parse_config(args.config, overrides=overrides)
        return run(config, out_dir=args.out, threads=args.threads)
    except SimulationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
