"""
Door configurations and knock sequences

A configuration is an ordered list of doors (fundamental distributions)
plus a dependency structure from the acyclic, positively correlated,
gated family: door i's knocks count toward its fundamental distribution
only while all of its predecessors are open.
"""
import enum
import itertools
from pathlib import Path
from typing import Callable, FrozenSet, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError

from src.core.exceptions import ConfigurationError
from src.models.distributions import FundamentalDistribution
from src.utils.logger import logger


# ============================================
# Dependency Structures
# ============================================

class DependencyMode(str, enum.Enum):
    """Named dependency structures"""
    INDEPENDENT = "independent"
    CASCADING = "cascading"
    DAG = "dag"


class DagDependency(BaseModel):
    """Explicit predecessor lists, 1-based, one list per door"""
    model_config = ConfigDict(frozen=True)

    dag: List[List[int]]


class DoorConfiguration(BaseModel):
    """
    A system of d doors

    `dependency` is "independent", "cascading" or {"dag": [[...], ...]}.
    Semantic checks (index ranges, topological order) are reported by
    `validate` rather than raised at construction.
    """
    model_config = ConfigDict(frozen=True)

    doors: List[FundamentalDistribution]
    dependency: Union[DependencyMode, DagDependency] = DependencyMode.INDEPENDENT

    @property
    def d(self) -> int:
        return len(self.doors)

    @property
    def mode(self) -> DependencyMode:
        if isinstance(self.dependency, DagDependency):
            return DependencyMode.DAG
        return DependencyMode(self.dependency)

    def predecessors(self) -> Tuple[FrozenSet[int], ...]:
        """
        0-based predecessor sets of every door

        Independent doors have empty sets, cascading door i has {i-1}.
        """
        mode = self.mode
        if mode == DependencyMode.INDEPENDENT:
            return tuple(frozenset() for _ in range(self.d))
        if mode == DependencyMode.CASCADING:
            return tuple(frozenset({i - 1}) if i > 0 else frozenset() for i in range(self.d))
        return tuple(frozenset(j - 1 for j in preds) for preds in self.dependency.dag)

    def with_dependency(
        self, dependency: Union[DependencyMode, DagDependency, str, dict]
    ) -> "DoorConfiguration":
        """Similar configuration (same doors) under another dependency structure"""
        return DoorConfiguration.model_validate(
            {"doors": [door.model_dump() for door in self.doors], "dependency": dependency}
        )

    @classmethod
    def from_predecessors(
        cls, doors: Sequence, predecessors: Sequence[Iterable[int]]
    ) -> "DoorConfiguration":
        """Build a DAG configuration from 0-based predecessor sets"""
        dag = [sorted(j + 1 for j in preds) for preds in predecessors]
        return cls(doors=list(doors), dependency=DagDependency(dag=dag))


# ============================================
# Validation
# ============================================

def validate(config: DoorConfiguration) -> List[str]:
    """
    Collect every invariant violation of a configuration

    Returns:
        List of human readable violations; empty when the configuration is valid
    """
    violations: List[str] = []

    if config.d < 1:
        violations.append("d >= 1 required: the door list is empty")

    if config.dependency == DependencyMode.DAG:
        violations.append('dag dependency needs predecessor lists: {"dag": [[...], ...]}')

    if isinstance(config.dependency, DagDependency):
        dag = config.dependency.dag
        if len(dag) != config.d:
            violations.append(
                f"dag lists {len(dag)} predecessor sets for {config.d} doors"
            )
        for door, preds in enumerate(dag, start=1):
            for pred in preds:
                if pred >= door:
                    violations.append(
                        f"door {door}: self/forward reference to door {pred}"
                    )
                elif pred < 1:
                    violations.append(f"door {door}: unknown predecessor {pred}")

    return violations


def ensure_valid(config: DoorConfiguration, min_doors: int = 1) -> DoorConfiguration:
    """Raise ConfigurationError listing all violations, if any"""
    violations = validate(config)
    if config.d < min_doors and config.d >= 1:
        violations.append(f"d >= {min_doors} required, got {config.d}")
    if violations:
        raise ConfigurationError(violations)
    return config


def load_configuration(path: Union[str, Path]) -> DoorConfiguration:
    """
    Read and validate a configuration file

    The file is UTF-8 JSON (read through the YAML loader, which accepts JSON).

    Raises:
        ConfigurationError: missing file, malformed content or invariant violations
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError([f"configuration file not found: {path}"])

    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as e:
        raise ConfigurationError([f"{path}: cannot parse: {e}"])

    try:
        config = DoorConfiguration.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(
            f"{'.'.join(str(part) for part in err['loc'])}: {err['msg']}"
            for err in e.errors()
        )

    logger.debug(f"Loaded configuration {path}: d={config.d}, dependency={config.mode.value}")
    return ensure_valid(config)


# ============================================
# Knock Sequences
# ============================================

class KnockSequence:
    """
    A finite or lazily generated infinite sequence of 1-based door indices

    The sequence is described by a factory returning a fresh iterator, so
    every iteration (and every clone) restarts from knock 1.
    """

    def __init__(
        self,
        factory: Callable[[], Iterator[int]],
        d: int,
        length: Optional[int] = None,
        name: str = "custom",
    ):
        self._factory = factory
        self.d = d
        self.length = length
        self.name = name

    def __iter__(self) -> Iterator[int]:
        return iter(self._factory())

    def __repr__(self) -> str:
        size = "infinite" if self.length is None else f"length={self.length}"
        return f"KnockSequence({self.name}, d={self.d}, {size})"

    @property
    def is_finite(self) -> bool:
        return self.length is not None

    def clone(self) -> "KnockSequence":
        return KnockSequence(self._factory, self.d, self.length, self.name)

    def prefix(self, n: int) -> np.ndarray:
        """
        First n knocks (fewer if the sequence is finite and shorter)

        Raises:
            ConfigurationError: a knock refers to a door outside 1..d
        """
        knocks = np.fromiter(itertools.islice(self, n), dtype=np.int64)
        if knocks.size and (knocks.min() < 1 or knocks.max() > self.d):
            raise ConfigurationError(
                [f"sequence {self.name} knocks on a door outside 1..{self.d}"]
            )
        return knocks

    def prefix_counts(self, n: int) -> np.ndarray:
        """
        Knock counts π_i(t) for t = 0..len(prefix)

        Returns:
            Integer array of shape (t_max + 1, d); row t sums to t
        """
        knocks = self.prefix(n)
        counts = np.zeros((knocks.size + 1, self.d), dtype=np.int64)
        if knocks.size:
            onehot = np.zeros((knocks.size, self.d), dtype=np.int64)
            onehot[np.arange(knocks.size), knocks - 1] = 1
            counts[1:] = np.cumsum(onehot, axis=0)
        return counts

    # ============================================
    # Constructors
    # ============================================

    @classmethod
    def from_knocks(cls, knocks: Sequence[int], d: Optional[int] = None, name: str = "inline") -> "KnockSequence":
        """Finite sequence from an explicit list"""
        block = tuple(int(k) for k in knocks)
        return cls(lambda: iter(block), d or max(block, default=1), len(block), name)

    @classmethod
    def repeat(cls, block: Sequence[int], d: Optional[int] = None, name: str = "repeat") -> "KnockSequence":
        """Infinite repetition of a finite block"""
        block = tuple(int(k) for k in block)
        if not block:
            raise ConfigurationError(["cannot repeat an empty block"])
        return cls(lambda: itertools.cycle(block), d or max(block), None, name)

    @classmethod
    def concat(cls, head: Sequence[int], tail: "KnockSequence", name: str = "concat") -> "KnockSequence":
        """Finite head followed by another sequence"""
        head = tuple(int(k) for k in head)
        length = None if tail.length is None else len(head) + tail.length
        d = max(tail.d, max(head, default=1))
        return cls(lambda: itertools.chain(head, tail), d, length, name)


def parse_knocks(text: str) -> List[int]:
    """
    Parse a comma separated knock list such as "1,2,1,2"

    Raises:
        ConfigurationError: on non-integer entries
    """
    try:
        return [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError:
        raise ConfigurationError([f"cannot parse knock list {text!r}"])
