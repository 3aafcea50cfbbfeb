"""
Command-line entry point
Run with: python -m src.cli.main <command> [options]

Exit codes: 0 success, 1 invalid configuration or arguments,
2 numerical failure (divergence, horizon or state caps, non-convergence,
simulation timeouts). Data goes to stdout, diagnostics to stderr.
"""
import argparse
import sys
from typing import List, Optional, TextIO

from pydantic import ValidationError

from src.cli.commands import evaluate, plan, price, simulate, two_door
from src.core.config import settings
from src.core.exceptions import ConfigurationError, DoorsError, NumericalError
from src.utils.logger import logger

COMMANDS = (plan, evaluate, simulate, two_door, price)


class CliArgumentParser(argparse.ArgumentParser):
    """Argument parser reporting usage errors as configuration errors"""

    def error(self, message: str) -> None:
        raise ConfigurationError([f"{self.prog}: {message}"])


# ============================================
# Parser
# ============================================

def build_parser() -> argparse.ArgumentParser:
    common = CliArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, help="absolute evaluation tolerance")
    common.add_argument(
        "--format", choices=("lines", "csv"), default="lines", help="output format"
    )

    parser = CliArgumentParser(
        prog="doors",
        description=f"{settings.APP_NAME} {settings.APP_VERSION}: plan, evaluate and "
        "simulate knock sequences for dependent doors",
    )
    subparsers = parser.add_subparsers(
        dest="command", required=True, parser_class=CliArgumentParser
    )
    for command in COMMANDS:
        command.register(_SharedOptions(subparsers, common))
    return parser


class _SharedOptions:
    """Sub-parser factory adding the shared options to every command"""

    def __init__(self, subparsers, common: argparse.ArgumentParser):
        self._subparsers = subparsers
        self._common = common

    def add_parser(self, name: str, **kwargs) -> argparse.ArgumentParser:
        return self._subparsers.add_parser(name, parents=[self._common], **kwargs)


# ============================================
# Dispatch
# ============================================

def _report(error: Exception, err: TextIO) -> None:
    if isinstance(error, ConfigurationError):
        for violation in error.violations:
            err.write(f"error: {violation}\n")
    elif isinstance(error, ValidationError):
        for item in error.errors():
            location = ".".join(str(part) for part in item["loc"])
            err.write(f"error: {location}: {item['msg']}\n")
    else:
        err.write(f"error: {error}\n")


def parse_and_dispatch(
    argv: Optional[List[str]] = None,
    out: Optional[TextIO] = None,
    err: Optional[TextIO] = None,
) -> int:
    """
    Parse `argv`, run the selected command and map failures to exit codes
    """
    out = out or sys.stdout
    err = err or sys.stderr

    try:
        args = build_parser().parse_args(argv)
        if args.tol is not None and args.tol <= 0:
            raise ValueError("--tol must be positive")
        logger.debug(f"dispatching {args.command}")
        return args.func(args, out)
    except NumericalError as e:
        logger.debug(f"numerical failure: {e!r}")
        _report(e, err)
        return e.exit_code
    except (DoorsError, ValidationError, ValueError) as e:
        _report(e, err)
        return 1


def main() -> None:
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
