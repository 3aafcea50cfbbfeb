"""
Sub-commands and the options they share
"""
import argparse

from src.core.exceptions import ConfigurationError
from src.engine.planner import a_simp, doubling_sequence, phase_doubling
from src.models.configurations import DoorConfiguration, KnockSequence, load_configuration, parse_knocks

ALGORITHMS = ("doubling", "a_simp", "phase_doubling")


def add_config_option(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="door configuration file (JSON)")


def add_sequence_options(parser: argparse.ArgumentParser) -> None:
    """Mutually exclusive ways to name a knock sequence"""
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--sequence", help="finite inline sequence, e.g. 1,2,1,2")
    group.add_argument("--repeat", help="finite block repeated forever, e.g. 1,2")
    group.add_argument("--algorithm", choices=ALGORITHMS, help="planner generating the sequence")


def load_config(args: argparse.Namespace) -> DoorConfiguration:
    return load_configuration(args.config)


def algorithm_sequence(name: str, config: DoorConfiguration) -> KnockSequence:
    if name == "doubling":
        return doubling_sequence(config)
    if name == "a_simp":
        return a_simp(config.d)
    if name == "phase_doubling":
        return phase_doubling(config.d)
    raise ConfigurationError([f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}"])


def resolve_sequence(args: argparse.Namespace, config: DoorConfiguration) -> KnockSequence:
    """
    Build the sequence named on the command line

    Raises:
        ConfigurationError: unparsable knocks or doors outside 1..d
    """
    if args.sequence is not None:
        seq = KnockSequence.from_knocks(parse_knocks(args.sequence), d=config.d, name="inline")
    elif args.repeat is not None:
        seq = KnockSequence.repeat(parse_knocks(args.repeat), d=config.d, name="repeat")
    else:
        seq = algorithm_sequence(args.algorithm, config)

    block = parse_knocks(args.sequence or args.repeat or "")
    bad = sorted({k for k in block if not 1 <= k <= config.d})
    if bad:
        raise ConfigurationError(
            [f"knock on door {k} outside 1..{config.d}" for k in bad]
        )
    return seq
