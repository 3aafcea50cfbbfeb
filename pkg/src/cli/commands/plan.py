"""
plan: print the first knocks of a planned sequence
"""
import argparse
import itertools
from typing import TextIO

from src.cli.commands import ALGORITHMS, add_config_option, algorithm_sequence, load_config
from src.cli.output import emit_table
from src.core.config import settings
from src.engine.planner import dp_table, optimal_prefix


def register(subparsers) -> None:
    parser = subparsers.add_parser("plan", help="emit the first knocks of a planner's sequence")
    add_config_option(parser)
    parser.add_argument(
        "--algorithm",
        choices=ALGORITHMS + ("optimal",),
        default="doubling",
        help="planner; 'optimal' prints the sorted DP optimum of length --knocks",
    )
    parser.add_argument("--knocks", type=int, default=16, help="number of knocks to emit")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace, out: TextIO) -> int:
    if args.knocks < 0:
        raise ValueError("--knocks must be non-negative")
    config = load_config(args)

    if args.algorithm == "optimal":
        table = dp_table(config, args.knocks)
        knocks = list(optimal_prefix(config, args.knocks, table))
        success = table.value(args.knocks)
    else:
        knocks = list(itertools.islice(algorithm_sequence(args.algorithm, config), args.knocks))
        success = None

    if args.format == "csv":
        rows = [{"knock": i, "door": door} for i, door in enumerate(knocks, start=1)]
        emit_table(rows, ["knock", "door"], "csv", out)
    else:
        out.write(",".join(str(door) for door in knocks) + "\n")
        if success is not None:
            out.write(f"success_probability={settings.float_format % success}\n")
    return 0
