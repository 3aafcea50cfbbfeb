"""
Near-optimal knock sequences for general configurations

The finite-horizon DP table maximizes the probability that every door is
open after T knocks over sorted prefixes 1^{k1} 2^{k2} ... d^{kd}; the
doubling sequence concatenates the optimal prefixes of length 2, 4, 8, ...
"""
import itertools
import threading
from typing import Iterator, List, Optional

import numpy as np

from src.models.configurations import DoorConfiguration, KnockSequence, ensure_valid
from src.utils.logger import logger


class DpTable:
    """
    A[i][t]: best probability that doors 1..i are all open after t knocks
    spent on them, with choice[i][t] the knocks k given to door i

    A[0][t] = 1, A[i][0] = Π_{j≤i} (1 - p_j(0)) and
    A[i][t] = max_k A[i-1][t-k] * (1 - p_i(k)); among maximizing k the
    smallest one wins. The table grows in place when a longer horizon is
    requested, reusing memoized survival values. Growth and lookups hold a
    re-entrant lock so one table can back several sequences across threads.
    """

    def __init__(self, config: DoorConfiguration, horizon: int = 0):
        ensure_valid(config)
        self.config = config
        self.d = config.d
        self._lock = threading.RLock()
        self._opened = np.stack([1.0 - door.survival_array(np.arange(1)) for door in config.doors])
        self.A = np.ones((self.d + 1, 1))
        self.A[1:, 0] = np.cumprod(self._opened[:, 0])
        self.choice = np.zeros((self.d + 1, 1), dtype=np.int64)
        self.extend(horizon)

    @property
    def horizon(self) -> int:
        return self.A.shape[1] - 1

    def extend(self, horizon: int) -> "DpTable":
        """Grow the table to cover t = 0..horizon"""
        if horizon < 0:
            raise ValueError("horizon must be non-negative")
        with self._lock:
            return self._grow(horizon)

    def _grow(self, horizon: int) -> "DpTable":
        old = self.horizon
        if horizon <= old:
            return self

        ts = np.arange(horizon + 1)
        fresh = np.stack(
            [1.0 - door.survival_array(ts[old + 1 :]) for door in self.config.doors]
        )
        self._opened = np.concatenate([self._opened[:, : old + 1], fresh], axis=1)
        A = np.ones((self.d + 1, horizon + 1))
        choice = np.zeros((self.d + 1, horizon + 1), dtype=np.int64)
        A[:, : old + 1] = self.A
        choice[:, : old + 1] = self.choice

        for i in range(1, self.d + 1):
            opened = self._opened[i - 1]
            if i == 1:
                # every knock goes to the only door so far
                A[1, old + 1 :] = opened[old + 1 :]
                choice[1, old + 1 :] = ts[old + 1 :]
                continue
            previous = A[i - 1]
            for t in range(old + 1, horizon + 1):
                # candidates[k] = A[i-1][t-k] * (1 - p_i(k)), k = 0..t
                candidates = previous[t::-1] * opened[: t + 1]
                k = int(np.argmax(candidates))
                A[i, t] = candidates[k]
                choice[i, t] = k

        self.A, self.choice = A, choice
        logger.debug(f"DP table extended from T={old} to T={horizon} for d={self.d}")
        return self

    def value(self, t: int) -> float:
        """A[d][t]"""
        with self._lock:
            self.extend(t)
            return float(self.A[self.d, t])

    def allocation(self, t: int) -> List[int]:
        """Knock counts (k_1, ..., k_d) of the optimal sorted prefix of length t"""
        with self._lock:
            self.extend(t)
            choice = self.choice
        counts = [0] * self.d
        remaining = t
        for i in range(self.d, 0, -1):
            k = int(choice[i, remaining])
            counts[i - 1] = k
            remaining -= k
        return counts

    def prefix(self, t: int) -> List[int]:
        """Sorted optimal prefix α_t = 1^{k1} 2^{k2} ... d^{kd}"""
        return [
            door
            for door, k in enumerate(self.allocation(t), start=1)
            for _ in range(k)
        ]


def dp_table(config: DoorConfiguration, T: int) -> DpTable:
    """
    Build the DP table up to horizon T

    Only the fundamental distributions are used; for sorted prefixes the
    success probability is the same under every gated dependency.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    return DpTable(config, T)


def optimal_prefix(config: DoorConfiguration, T: int, table: Optional[DpTable] = None) -> KnockSequence:
    """Finite sorted sequence α_T realizing A[d][T]"""
    if T < 0:
        raise ValueError("T must be non-negative")
    table = dp_table(config, T) if table is None else table
    return KnockSequence.from_knocks(table.prefix(T), d=config.d, name=f"alpha_{T}")


def doubling_sequence(config: DoorConfiguration) -> KnockSequence:
    """
    Infinite sequence α_2 α_4 α_8 ...

    Blocks are generated lazily from one table shared by every iteration
    of the returned sequence.
    """
    table = dp_table(config, 0)

    def blocks() -> Iterator[int]:
        for n in itertools.count(1):
            yield from table.prefix(2 ** n)

    return KnockSequence(blocks, config.d, None, "doubling")


def a_simp(d: int) -> KnockSequence:
    """Round robin (1, 2, ..., d)^∞"""
    if d < 1:
        raise ValueError("d must be at least 1")
    return KnockSequence.repeat(range(1, d + 1), d=d, name="a_simp")


def phase_doubling(d: int) -> KnockSequence:
    """1^1..d^1, 1^2..d^2, 1^4..d^4, ..."""
    if d < 1:
        raise ValueError("d must be at least 1")

    def phases() -> Iterator[int]:
        for n in itertools.count():
            for door in range(1, d + 1):
                yield from itertools.repeat(door, 2 ** n)

    return KnockSequence(phases, d, None, "phase_doubling")
