"""
simulate: Monte Carlo estimate of the expected completion time
"""
import argparse
from typing import TextIO

from src.cli.commands import add_config_option, add_sequence_options, load_config, resolve_sequence
from src.cli.output import emit_lines, emit_table
from src.engine.simulator import estimate_expected_time


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="Monte Carlo estimate of the completion time")
    add_config_option(parser)
    add_sequence_options(parser)
    parser.add_argument("--trials", type=int, help="number of trials")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    parser.add_argument("--horizon", type=int, help="knock cap per trial")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace, out: TextIO) -> int:
    config = load_config(args)
    seq = resolve_sequence(args, config)
    estimate = estimate_expected_time(
        config,
        seq,
        trials=args.trials,
        seed=args.seed,
        threads=args.threads,
        cap=args.horizon,
    )
    row = {
        "mean": estimate.mean,
        "ci99": estimate.ci99,
        "trials": estimate.trials,
        "timeout_rate": estimate.timeout_rate,
        "seed": estimate.seed,
    }
    if args.format == "csv":
        emit_table([row], list(row), "csv", out)
    else:
        emit_lines(row.items(), out)
    return 0
