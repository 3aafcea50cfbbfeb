"""
price: price of lacking feedback for similar doors
"""
import argparse
from typing import TextIO

from src.cli.commands import add_config_option, load_config
from src.cli.output import emit_table
from src.engine.price import price_report

COLUMNS = ["d", "e_single", "e_max", "kappa", "bound", "price"]


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "price", help="price of lacking feedback for copies of the first door"
    )
    add_config_option(parser)
    parser.add_argument("--d", help="comma separated door counts (default: the configuration's d)")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace, out: TextIO) -> int:
    config = load_config(args)
    counts = [int(part) for part in args.d.split(",") if part] if args.d else [config.d]
    if any(d < 1 for d in counts):
        raise ValueError("--d values must be at least 1")

    rows = []
    for d in counts:
        report = price_report(config.doors[0], d, args.tol)
        rows.append(
            {
                "d": report.d,
                "e_single": report.e_single,
                "e_max": report.e_max,
                "kappa": report.kappa,
                "bound": report.lm_max_bound,
                "price": report.price,
            }
        )
    emit_table(rows, COLUMNS, args.format, out)
    return 0
