"""
two-door: semi-fractional optimum, rounding and bounds for two cascading
memoryless doors
"""
import argparse
from typing import TextIO

from src.cli.output import emit_lines, emit_table
from src.engine.twodoor import round_to_integer, summarize, value_iteration
from src.models.schemas import TwoDoorParams


def register(subparsers) -> None:
    parser = subparsers.add_parser("two-door", help="two cascading memoryless doors")
    parser.add_argument("--p1", type=float, required=True, help="door 1 opening probability")
    parser.add_argument("--p2", type=float, required=True, help="door 2 opening probability")
    parser.add_argument("--c", type=float, default=1.0, help="duration of a 2-knock")
    parser.add_argument(
        "--horizon",
        type=int,
        default=20,
        help="number of 2-knocks listed by --format csv",
    )
    parser.add_argument(
        "--value-iteration",
        action="store_true",
        help="also run the belief-state value iteration oracle",
    )
    parser.add_argument("--grid", type=int, help="value iteration grid size")
    parser.set_defaults(func=run)


def run(args: argparse.Namespace, out: TextIO) -> int:
    params = TwoDoorParams(p1=args.p1, p2=args.p2, c=args.c)
    summary = summarize(params, args.tol)
    plan = summary.plan

    if args.format == "csv":
        if args.horizon < 1:
            raise ValueError("--horizon must be at least 1")
        rounded = round_to_integer(plan, args.horizon)
        rows = [
            {"i": i, "pi": plan.s + (i - 1) * plan.t, "pi_rounded": int(rounded.cumulative(i))}
            for i in range(1, args.horizon + 1)
        ]
        emit_table(rows, ["i", "pi", "pi_rounded"], "csv", out)
        return 0

    pairs = [
        ("p1", params.p1),
        ("p2", params.p2),
        ("c", params.c),
        ("z_star", plan.z_star),
        ("s", plan.s),
        ("t", plan.t),
        ("semifractional_value", plan.value),
        ("approx_low", summary.approx.low),
        ("approx_high", summary.approx.high),
        ("rounded_value", summary.rounded_value),
        ("upper_bound", summary.upper_bound),
        ("feedback_baseline", summary.feedback_baseline),
        ("feedback_price", summary.feedback_price),
        ("dependency_price", summary.dependency_price),
        ("rounded_prefix", summary.rounded_prefix),
    ]
    if args.value_iteration:
        oracle = value_iteration(params, grid_size=args.grid)
        pairs += [
            ("value_iteration_value", oracle.value),
            ("value_iteration_prefix", oracle.policy_prefix),
        ]
    emit_lines(pairs, out)
    return 0
