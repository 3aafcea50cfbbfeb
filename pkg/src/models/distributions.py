"""
Fundamental distributions of doors

A fundamental distribution is the survival function p(n): the probability
that a door is still closed after n effective knocks. p(0) = 1 and p is
non-increasing for every kind.
"""
import enum
import math
from typing import Annotated, List, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, field_validator
from scipy.special import zeta

from src.core.config import settings


# ============================================
# Enums
# ============================================

class DistributionKind(str, enum.Enum):
    """Supported families of fundamental distributions"""
    GEOMETRIC = "geometric"
    DETERMINISTIC = "deterministic"
    POLYNOMIAL = "polynomial"
    TABLE = "table"


# ============================================
# Base Distribution
# ============================================

class BaseDistribution(BaseModel):
    """
    Common interface of all fundamental distributions

    Subclasses implement the vectorized survival function, the tail sums
    Σ_{m≥n} p(m)^k and inverse-CDF sampling of the opening knock count.
    """
    model_config = ConfigDict(frozen=True)

    def survival_array(self, n: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def tail_sum(self, n: int, power: int = 1) -> float:
        raise NotImplementedError

    def open_counts_from_uniform(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def label(self) -> str:
        fields = ", ".join(
            f"{key}={value}" for key, value in self.model_dump().items() if key != "kind"
        )
        return f"{self.kind}({fields})"

    def survival(self, n: int) -> float:
        """p(n) for a single knock count n >= 0"""
        if n < 0:
            raise ValueError(f"knock count must be non-negative, got {n}")
        return float(self.survival_array(np.asarray([n], dtype=np.int64))[0])

    def mean(self, tol: Optional[float] = None) -> float:
        """
        Expected number of knocks to open the door on its own, Σ_{n≥0} p(n)

        All kinds have closed forms, so the result is exact up to
        floating point; `tol` is accepted for interface symmetry.
        """
        if tol is not None and tol <= 0:
            raise ValueError("tol must be positive")
        return self.tail_sum(0)

    def sample_open_counts(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw `size` i.i.d. opening knock counts N with P(N > n) = p(n)"""
        u = 1.0 - rng.random(size)
        return self.open_counts_from_uniform(u)

    def sample_open_count(self, rng: np.random.Generator) -> int:
        """Draw one opening knock count N >= 1"""
        return int(self.sample_open_counts(rng, 1)[0])


# ============================================
# Concrete Families
# ============================================

class GeometricDistribution(BaseDistribution):
    """Memoryless door: opens on each knock with probability p"""
    kind: Literal["geometric"] = "geometric"
    p: float = Field(..., gt=0.0, le=1.0)

    @property
    def q(self) -> float:
        return 1.0 - self.p

    def survival_array(self, n: np.ndarray) -> np.ndarray:
        return np.power(self.q, np.asarray(n, dtype=float))

    def tail_sum(self, n: int, power: int = 1) -> float:
        qk = self.q ** power
        return qk ** n / (1.0 - qk)

    def mean(self, tol: Optional[float] = None) -> float:
        if tol is not None and tol <= 0:
            raise ValueError("tol must be positive")
        return 1.0 / self.p

    def open_counts_from_uniform(self, u: np.ndarray) -> np.ndarray:
        if self.q == 0.0:
            return np.ones(np.shape(u), dtype=np.int64)
        counts = np.ceil(np.log(u) / math.log1p(-self.p))
        return np.maximum(counts, 1).astype(np.int64)


class DeterministicDistribution(BaseDistribution):
    """Door that opens exactly at its k-th effective knock"""
    kind: Literal["deterministic"] = "deterministic"
    k: int = Field(..., ge=1)

    def survival_array(self, n: np.ndarray) -> np.ndarray:
        return (np.asarray(n) < self.k).astype(float)

    def tail_sum(self, n: int, power: int = 1) -> float:
        return float(max(self.k - n, 0))

    def open_counts_from_uniform(self, u: np.ndarray) -> np.ndarray:
        return np.full(np.shape(u), self.k, dtype=np.int64)


class PolynomialDistribution(BaseDistribution):
    """Heavy tailed door with p(n) = min(1, c / n^a), a > 1"""
    kind: Literal["polynomial"] = "polynomial"
    c: float = Field(..., gt=0.0)
    a: float = Field(..., gt=1.0)

    def survival_array(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(n == 0, 1.0, np.minimum(1.0, self.c / np.power(n, self.a)))

    @property
    def saturation_index(self) -> int:
        """Smallest m >= 1 with c / m^a <= 1"""
        m = max(1, math.ceil(self.c ** (1.0 / self.a)))
        while m > 1 and self.c / (m - 1) ** self.a <= 1.0:
            m -= 1
        while self.c / m ** self.a > 1.0:
            m += 1
        return m

    def tail_sum(self, n: int, power: int = 1) -> float:
        m1 = self.saturation_index
        start = max(n, m1)
        # Hurwitz zeta: Σ_{m≥start} m^{-ka}
        tail = self.c ** power * float(zeta(power * self.a, start))
        return float(max(m1 - n, 0)) + tail

    def open_counts_from_uniform(self, u: np.ndarray) -> np.ndarray:
        counts = np.ceil(np.power(self.c / u, 1.0 / self.a))
        return np.maximum(counts, 1).astype(np.int64)


class TableDistribution(BaseDistribution):
    """
    Empirical survival table with a geometric tail

    p(n) = values[n] for n < len(values), then values[-1] * tail_q^(n - len + 1).
    """
    kind: Literal["table"] = "table"
    values: List[float] = Field(..., min_length=1)
    tail_q: float = Field(..., ge=0.0)

    @field_validator("values")
    @classmethod
    def check_values(cls, values: List[float]) -> List[float]:
        if values[0] != 1.0:
            raise ValueError("values[0] must be 1 (a door starts closed)")
        if any(v < 0.0 or v > 1.0 for v in values):
            raise ValueError("survival values must lie in [0, 1]")
        if any(b > a for a, b in zip(values, values[1:])):
            raise ValueError("survival values must be non-increasing")
        return values

    @field_validator("tail_q")
    @classmethod
    def check_tail(cls, tail_q: float) -> float:
        if tail_q >= 1.0:
            raise ValueError("tail_q must be < 1, otherwise the mean diverges")
        return tail_q

    def survival_array(self, n: np.ndarray) -> np.ndarray:
        n = np.asarray(n, dtype=np.int64)
        table = np.asarray(self.values, dtype=float)
        size = len(table)
        inside = table[np.minimum(n, size - 1)]
        beyond = table[-1] * np.power(self.tail_q, np.maximum(n - size + 1, 0).astype(float))
        return np.where(n < size, inside, beyond)

    def tail_sum(self, n: int, power: int = 1) -> float:
        table = np.asarray(self.values, dtype=float) ** power
        size = len(table)
        qk = self.tail_q ** power
        last = table[-1]
        if n < size:
            return float(table[n:].sum() + last * qk / (1.0 - qk))
        return float(last * qk ** (n - size + 1) / (1.0 - qk))

    def open_counts_from_uniform(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        table = np.asarray(self.values, dtype=float)
        size = len(table)
        # first n in 1..size-1 with values[n] <= u
        idx = np.searchsorted(-table[1:], -u, side="left") + 1
        counts = idx.astype(np.int64)
        beyond = idx >= size
        if np.any(beyond):
            last = table[-1]
            if self.tail_q == 0.0 or last == 0.0:
                counts[beyond] = size
            else:
                steps = np.ceil(np.log(u[beyond] / last) / math.log(self.tail_q))
                counts[beyond] = size - 1 + np.maximum(steps, 1).astype(np.int64)
        return counts


FundamentalDistribution = Annotated[
    Union[
        GeometricDistribution,
        DeterministicDistribution,
        PolynomialDistribution,
        TableDistribution,
    ],
    Field(discriminator="kind"),
]

distribution_adapter = TypeAdapter(FundamentalDistribution)


# ============================================
# Module Level Operations
# ============================================

def parse_distribution(data: dict) -> BaseDistribution:
    """Build a distribution from its configuration-file mapping"""
    return distribution_adapter.validate_python(data)


def survival(dist: BaseDistribution, n: int) -> float:
    """p(n) of `dist`"""
    return dist.survival(n)


def mean(dist: BaseDistribution, tol: Optional[float] = None) -> float:
    """Σ_{n≥0} p(n) of `dist`"""
    return dist.mean(settings.DEFAULT_TOL if tol is None else tol)


def sample_open_count(dist: BaseDistribution, rng: np.random.Generator) -> int:
    """Inverse-CDF draw of the knock count at which `dist` opens"""
    return dist.sample_open_count(rng)
