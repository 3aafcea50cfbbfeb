"""
Error hierarchy for the dependent doors toolkit

Every error carries the exit code the CLI reports for it.
"""
from typing import Iterable, List


class DoorsError(Exception):
    """Base class for all toolkit errors"""
    exit_code: int = 1


class ConfigurationError(DoorsError):
    """
    A door configuration, sequence or run option is invalid

    All violations found are collected in `violations`.
    """
    exit_code = 1

    def __init__(self, violations: Iterable[str]):
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations) or "invalid configuration")


class NumericalError(DoorsError):
    """A numerical procedure could not produce a result within its limits"""
    exit_code = 2


class DivergenceError(NumericalError):
    """The expected completion time of a sequence is infinite"""


class HorizonExceededError(NumericalError):
    """Truncation would need more knocks than the configured horizon cap"""


class StateSpaceOverflowError(NumericalError):
    """The DAG evaluator needs more joint states than the configured cap"""


class NonConvergenceError(NumericalError):
    """An iterative solver stopped before reaching its tolerance"""


class SimulationTimeoutError(NumericalError):
    """Some Monte Carlo trials did not finish within the knock cap"""

    def __init__(self, message: str, timeout_rate: float):
        self.timeout_rate = timeout_rate
        super().__init__(message)
