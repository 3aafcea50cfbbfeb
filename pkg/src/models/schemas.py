"""
Pydantic schemas for solver inputs and results
"""
import math
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


# ============================================
# Base Schemas
# ============================================

class BaseSchema(BaseModel):
    """Base schema with common configuration"""
    model_config = ConfigDict(frozen=True)


# ============================================
# Evaluator Schemas
# ============================================

class SurvivalCurve(BaseSchema):
    """
    SC(t) = P(some door still closed after the first t knocks), t = 0..horizon

    `tail` is an upper bound on the truncated remainder Σ_{t>horizon} SC(t):
    0 when the curve reaches 0, inf when a finite sequence stops with some
    door possibly closed.
    """
    values: List[float]
    tail: float = Field(0.0, ge=0.0)

    @property
    def horizon(self) -> int:
        return len(self.values) - 1

    @property
    def expected_time(self) -> float:
        """Truncated sum Σ_{t≤horizon} SC(t), within `tail` below the exact value"""
        return math.fsum(self.values)

    @property
    def upper_bound(self) -> float:
        return self.expected_time + self.tail


# ============================================
# Two-Door Schemas
# ============================================

class TwoDoorParams(BaseSchema):
    """
    Two cascading memoryless doors

    Door 1 opens with probability p1 per knock; door 2 opens with
    probability p2 per knock once door 1 is open and a 2-knock lasts c.
    """
    p1: float = Field(..., gt=0.0, lt=1.0)
    p2: float = Field(..., gt=0.0, lt=1.0)
    c: float = Field(1.0, gt=0.0)

    @property
    def q1(self) -> float:
        return 1.0 - self.p1

    @property
    def q2(self) -> float:
        return 1.0 - self.p2


class BeliefState(BaseSchema):
    """x = P(door 1 closed | not finished)"""
    x: float = Field(..., gt=0.0, le=1.0)


class OneKnock(BaseSchema):
    """A (possibly fractional) run of 1-knocks of total length `length`"""
    kind: Literal["one"] = "one"
    length: float = Field(1.0, ge=0.0)


class TwoKnock(BaseSchema):
    """A single knock on door 2"""
    kind: Literal["two"] = "two"


BeliefAction = Union[OneKnock, TwoKnock]


class SemiFractionalPlan(BaseSchema):
    """
    Optimal semi-fractional sequence 1^s (2 1^t)^∞

    s = log_q1(x), t = log_q1(q2 + p2·x) with x = 1 - z_star.
    """
    params: TwoDoorParams
    z_star: float = Field(..., gt=0.0, lt=1.0)
    x: float
    s: float = Field(..., ge=0.0)
    t: float = Field(..., ge=0.0)
    value: float
    psi: float
    iterations: int = 0

    @model_validator(mode="after")
    def check_x(self) -> "SemiFractionalPlan":
        if abs(self.x - (1.0 - self.z_star)) > 1e-12:
            raise ValueError("x must equal 1 - z_star")
        return self


class ApproxInterval(BaseSchema):
    """Closed-form bracket of the semi-fractional optimum"""
    theta: float
    psi: float
    low: float
    high: float

    def contains(self, value: float, slack: float = 0.0) -> bool:
        return self.low - slack <= value <= self.high + slack


class ValueIterationResult(BaseSchema):
    """Belief-state value iteration oracle output"""
    value: float
    policy_prefix: List[int]
    iterations: int
    grid_size: int


class TwoDoorSummary(BaseSchema):
    """Everything the two-door command reports for one parameter point"""
    params: TwoDoorParams
    plan: SemiFractionalPlan
    approx: ApproxInterval
    rounded_value: float
    upper_bound: float
    feedback_baseline: float
    feedback_price: float
    dependency_price: Optional[float] = None
    rounded_prefix: List[int]


# ============================================
# Price Schemas
# ============================================

class PriceReport(BaseSchema):
    """Price of lacking feedback for d similar doors"""
    d: int = Field(..., ge=1)
    e_single: float
    e_max: float
    kappa: int
    lm_max_bound: float
    price: float


# ============================================
# Simulation Schemas
# ============================================

class TrialOutcome(BaseSchema):
    """One simulated run: knock index at which each door opened"""
    completion_knock: int
    per_door_open_knock: List[int]

    @model_validator(mode="after")
    def check_completion(self) -> "TrialOutcome":
        if self.per_door_open_knock and self.completion_knock != max(self.per_door_open_knock):
            raise ValueError("completion_knock must be the last door opening")
        return self


class SimulationEstimate(BaseSchema):
    """Monte Carlo estimate of the expected completion time"""
    mean: float
    ci99: float
    trials: int
    timeout_rate: float = 0.0
    seed: int
