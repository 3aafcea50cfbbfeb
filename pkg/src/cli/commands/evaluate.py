"""
evaluate: exact expected completion time of a sequence
"""
import argparse
from typing import TextIO

from src.cli.commands import add_config_option, add_sequence_options, load_config, resolve_sequence
from src.cli.output import emit_lines, emit_table
from src.core.exceptions import ConfigurationError
from src.engine.evaluator import (
    expected_time,
    feedback_baseline,
    survival_curve_cascading,
    survival_curve_independent,
)
from src.models.configurations import DependencyMode


def register(subparsers) -> None:
    parser = subparsers.add_parser("evaluate", help="exact expected completion time of a sequence")
    add_config_option(parser)
    add_sequence_options(parser)
    parser.add_argument(
        "--horizon",
        type=int,
        help="emit the survival curve SC(0..horizon) instead of the expected time",
    )
    parser.set_defaults(func=run)


def run(args: argparse.Namespace, out: TextIO) -> int:
    config = load_config(args)
    seq = resolve_sequence(args, config)

    if args.horizon is not None:
        if args.horizon < 0:
            raise ValueError("--horizon must be non-negative")
        if config.mode == DependencyMode.INDEPENDENT:
            curve = survival_curve_independent(config, seq, args.horizon)
        else:
            curve = survival_curve_cascading(config, seq, args.horizon)
        rows = [{"t": t, "survival": v} for t, v in enumerate(curve.values)]
        emit_table(rows, ["t", "survival"], args.format, out)
        return 0

    if not seq.is_finite and args.tol is None:
        raise ConfigurationError([f"--tol is required to evaluate the infinite sequence {seq.name}"])

    value = expected_time(config, seq, args.tol)
    baseline = feedback_baseline(config)
    row = {
        "dependency": config.mode.value,
        "sequence": seq.name,
        "expected_time": value,
        "feedback_baseline": baseline,
        "ratio": value / baseline,
    }
    columns = list(row)
    if args.format == "csv":
        emit_table([row], columns, "csv", out)
    else:
        emit_lines(row.items(), out)
    return 0
