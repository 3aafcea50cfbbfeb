"""
Two cascading memoryless doors

Door 1 opens with probability p1 per knock. Door 2 opens with probability
p2 per knock once door 1 is open, and a knock on door 2 lasts c time units.
A sequence is described by π_i, the total 1-knock time spent before the
i-th 2-knock. The belief x = P(door 1 closed | not finished) evolves as

    1-knock of length ℓ:   x -> q1^ℓ x
    2-knock:               x -> x / (q2 + p2 x)

The optimal semi-fractional sequence is 1^s (2 1^t)^∞ where
s = log_q1(x) and t = log_q1(q2 + p2 x) for the minimizer z* = 1 - x of
a one-dimensional objective; rounding its π_i up costs at most one unit.
"""
import itertools
import math
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.signal import lfilter

from src.core.config import settings
from src.core.exceptions import DivergenceError, NonConvergenceError
from src.models.configurations import KnockSequence
from src.models.schemas import (
    ApproxInterval,
    BeliefAction,
    BeliefState,
    OneKnock,
    SemiFractionalPlan,
    TwoDoorParams,
    TwoDoorSummary,
    TwoKnock,
    ValueIterationResult,
)
from src.utils.logger import logger
from src.utils.numeric import log1m_base_q, log_base_q, log_inv_q


_FIRST_CHUNK = 1024
_MAX_CHUNK = 1 << 20


# ============================================
# Two-Door Sequences
# ============================================

class TwoDoorSequence:
    """
    Non-decreasing cumulative 1-knock times π_1, π_2, ... (π_0 = 0)

    `rule` maps an array of 1-based 2-knock indices to their π values.
    `length` bounds the number of 2-knocks of a finite sequence.
    """

    def __init__(
        self,
        rule: Callable[[np.ndarray], np.ndarray],
        integer: bool,
        name: str = "custom",
        length: Optional[int] = None,
    ):
        self._rule = rule
        self.integer = integer
        self.name = name
        self.length = length

    def __repr__(self) -> str:
        kind = "integer" if self.integer else "semi-fractional"
        return f"TwoDoorSequence({self.name}, {kind})"

    def positions(self, start: int, stop: int) -> np.ndarray:
        """π_start .. π_{stop-1} (1-based indices, clipped to the length)"""
        if self.length is not None:
            stop = min(stop, self.length + 1)
        if stop <= start:
            return np.empty(0)
        return np.asarray(self._rule(np.arange(start, stop)), dtype=float)

    def cumulative(self, i: int) -> float:
        if i == 0:
            return 0.0
        values = self.positions(i, i + 1)
        if values.size == 0:
            raise IndexError(f"{self.name} has no 2-knock number {i}")
        return float(values[0])

    def knocks(self, limit: int) -> List[int]:
        """First `limit` knocks as door labels (integer sequences only)"""
        return list(itertools.islice(self._knock_iter(), limit))

    def _knock_iter(self) -> Iterator[int]:
        if not self.integer:
            raise ValueError(f"{self.name} has fractional 1-knocks and no knock list")
        previous = 0
        start = 1
        chunk = 64
        while True:
            pis = self.positions(start, start + chunk)
            if pis.size == 0:
                return
            for pi in pis.astype(np.int64):
                yield from itertools.repeat(1, int(pi) - previous)
                yield 2
                previous = int(pi)
            start += pis.size
            chunk = min(2 * chunk, _MAX_CHUNK)

    def to_knock_sequence(self) -> KnockSequence:
        """The same integer sequence as a general knock sequence over d = 2 doors"""
        return KnockSequence(self._knock_iter, 2, None, self.name)

    # ============================================
    # Constructors
    # ============================================

    @classmethod
    def alternating(cls) -> "TwoDoorSequence":
        """(1 2)^∞, π_i = i"""
        return cls(lambda idx: idx.astype(float), True, "alternating")

    @classmethod
    def periodic(cls, s: float, t: float) -> "TwoDoorSequence":
        """1^s (2 1^t)^∞, π_i = s + (i - 1) t"""
        if s < 0 or t < 0:
            raise ValueError("s and t must be non-negative")
        return cls(lambda idx: s + (idx - 1) * t, False, "semifractional")

    @classmethod
    def rounded(cls, s: float, t: float, length: Optional[int] = None) -> "TwoDoorSequence":
        """π'_i = ceil(s + (i - 1) t)"""
        if s < 0 or t < 0:
            raise ValueError("s and t must be non-negative")
        return cls(lambda idx: np.ceil(s + (idx - 1) * t), True, "rounded", length)

    @classmethod
    def from_knocks(cls, knocks: Sequence[int], extend: bool = True) -> "TwoDoorSequence":
        """
        Integer sequence from an explicit knock list over doors {1, 2}

        With `extend` the list is continued by alternating knocks: pending
        trailing 1-knocks are followed by a 2-knock, then (1 2)^∞.
        """
        if any(k not in (1, 2) for k in knocks):
            raise ValueError("two-door knock lists only contain doors 1 and 2")
        pis, ones = [], 0
        for k in knocks:
            if k == 1:
                ones += 1
            else:
                pis.append(float(ones))
        head = np.asarray(pis, dtype=float)
        n = head.size
        trailing = ones - (pis[-1] if pis else 0)
        next_pi = float(ones if trailing > 0 else ones + 1)

        def rule(idx: np.ndarray) -> np.ndarray:
            inside = head[np.minimum(idx, n) - 1] if n else np.zeros(idx.shape)
            return np.where(idx <= n, inside, next_pi + (idx - n - 1))

        return cls(rule, True, "inline", None if extend else n)


# ============================================
# Belief Maps
# ============================================

def belief_step(params: TwoDoorParams, x: BeliefState, action: BeliefAction) -> BeliefState:
    """Apply one action to the belief x = P(door 1 closed | not finished)"""
    if isinstance(action, OneKnock):
        return BeliefState(x=params.q1 ** action.length * x.x)
    return BeliefState(x=x.x / (params.q2 + params.p2 * x.x))


def word_affine(
    params: TwoDoorParams, x: float, word: Sequence[BeliefAction]
) -> Tuple[float, float, float]:
    """
    Affine form of a finite word from belief x

    Returns:
        (a, b, x') with E_x[w·π] = a + b·E_{x'}[π] for every continuation π
    """
    a, b = 0.0, 1.0
    for action in word:
        if isinstance(action, OneKnock):
            a += action.length * b
            x = params.q1 ** action.length * x
        else:
            a += params.c * b
            stay = params.q2 + params.p2 * x
            b *= stay
            x = x / stay
    return a, b, x


def periodic_value(
    params: TwoDoorParams, x: float, word: Sequence[BeliefAction], rel_tol: float = 1e-9
) -> float:
    """
    E_x[w^∞] = a / (1 - b) for an x-invariant word w

    Raises:
        ValueError: w does not map x back to itself, or never knocks door 2
    """
    if not any(isinstance(action, TwoKnock) for action in word):
        raise ValueError("a periodic word needs at least one 2-knock")
    a, b, x_end = word_affine(params, x, word)
    if abs(x_end - x) > rel_tol * x:
        raise ValueError(f"word is not x-invariant: {x} -> {x_end}")
    return a / (1.0 - b)


# ============================================
# Semi-Fractional Optimum
# ============================================

def _objective_array(params: TwoDoorParams, z: np.ndarray) -> np.ndarray:
    p2z = params.p2 * z
    return log1m_base_q(z, params.p1) + (
        params.c + (1.0 - p2z) * log1m_base_q(p2z, params.p1)
    ) / p2z


def semifractional_objective(params: TwoDoorParams, z: float) -> float:
    """
    Expected time of 1^s (2 1^t)^∞ with x = 1 - z:

        log_q1(1 - z) + (c + (1 - p2 z) log_q1(1 - p2 z)) / (p2 z)
    """
    if not 0.0 < z < 1.0:
        raise ValueError(f"z must lie in (0, 1), got {z}")
    return float(_objective_array(params, np.asarray([z]))[0])


def _bounded_minimum(
    obj: Callable[[float], float], a: float, b: float, tol: float, max_iter: int
) -> Tuple[float, int]:
    result = minimize_scalar(
        obj, bounds=(a, b), method="bounded", options={"xatol": tol, "maxiter": max_iter}
    )
    if not result.success:
        raise NonConvergenceError(
            f"bounded minimization on [{a:.3g}, {b:.3g}] stopped after {result.nit} "
            f"iterations for tol={tol:g} (cap {max_iter}): {result.message}"
        )
    return float(result.x), int(result.nit)


def approx_value(params: TwoDoorParams) -> ApproxInterval:
    """
    Closed-form bracket of the semi-fractional optimum

    With θ = -c ln(q1) / p2 and ψ = (sqrt(θ² + 4θ) - θ) / 2 the optimum lies in
    (ln(1/(1-ψ)) + θ/ψ + 1) / ln(1/q1) - [0, p2 / ln(1/q1)].
    """
    inv_log = 1.0 / log_inv_q(params.p1)
    theta = params.c * log_inv_q(params.p1) / params.p2
    psi = (math.sqrt(theta * theta + 4.0 * theta) - theta) / 2.0
    high = inv_log * (-math.log1p(-psi) + theta / psi + 1.0)
    return ApproxInterval(theta=theta, psi=psi, low=high - params.p2 * inv_log, high=high)


def solve_semifractional(
    params: TwoDoorParams,
    tol: Optional[float] = None,
    scan_points: Optional[int] = None,
) -> SemiFractionalPlan:
    """
    Minimize the semi-fractional objective over z in (0, 1)

    A bounded Brent search (golden section with parabolic steps) runs to
    `tol`; a dense scan of the interval guards against a non-unimodal
    objective, and for small p1 the minimizer is compared with the root ψ
    of z²/θ + z - 1 = 0.

    Raises:
        NonConvergenceError: the bounded search does not converge within the cap
    """
    tol = settings.GOLDEN_SECTION_TOL if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    scan_points = settings.DENSE_SCAN_POINTS if scan_points is None else scan_points
    if scan_points < 2:
        raise ValueError("scan_points must be at least 2")

    def objective(z: float) -> float:
        return semifractional_objective(params, z)

    edge = 1e-15
    z_star, iterations = _bounded_minimum(
        objective, edge, 1.0 - edge, tol, settings.GOLDEN_SECTION_MAX_ITER
    )
    value = objective(z_star)

    grid = (np.arange(scan_points) + 0.5) / scan_points
    scanned = _objective_array(params, grid)
    best = int(np.argmin(scanned))
    if scanned[best] < value - 10.0 * tol:
        logger.warning(
            f"bounded search minimum {value:.12g} above dense scan {scanned[best]:.12g}; "
            "refining around the scan minimum"
        )
        lo = grid[max(best - 1, 0)] if best > 0 else edge
        hi = grid[best + 1] if best + 1 < scan_points else 1.0 - edge
        z_star, more = _bounded_minimum(objective, lo, hi, tol, settings.GOLDEN_SECTION_MAX_ITER)
        iterations += more
        value = objective(z_star)

    psi = approx_value(params).psi
    if params.p1 <= 0.01 and abs(z_star - psi) > 10.0 * max(params.p1, params.p2) + 1e-3:
        logger.warning(
            f"minimizer z*={z_star:.6f} far from the first-order root psi={psi:.6f}"
        )

    x = 1.0 - z_star
    s = float(log_base_q(x, params.p1))
    t = float(log_base_q(params.q2 + params.p2 * x, params.p1))
    logger.info(
        f"semi-fractional optimum p1={params.p1} p2={params.p2} c={params.c}: "
        f"z*={z_star:.9f} s={s:.6f} t={t:.6f} value={value:.9f}"
    )
    return SemiFractionalPlan(
        params=params,
        z_star=z_star,
        x=x,
        s=max(s, 0.0),
        t=max(t, 0.0),
        value=value,
        psi=psi,
        iterations=iterations,
    )


def round_to_integer(plan: SemiFractionalPlan, horizon: Optional[int] = None) -> TwoDoorSequence:
    """
    Integer sequence π'_i = ceil(s + (i - 1) t), so π_i <= π'_i <= π_i + 1

    `horizon` limits the sequence to that many 2-knocks; by default the
    rounded sequence continues indefinitely.
    """
    if horizon is not None and horizon < 1:
        raise ValueError("horizon must be at least 1")
    return TwoDoorSequence.rounded(plan.s, plan.t, horizon)


# ============================================
# Exact Evaluation
# ============================================

def expected_time_two_door(
    params: TwoDoorParams,
    seq: TwoDoorSequence,
    tol: Optional[float] = None,
    horizon_cap: Optional[int] = None,
) -> float:
    """
    Expected completion time of a two-door sequence

    Walks the 2-knocks in chunks keeping u_j = P(not finished after the
    j-th 2-knock). Door 1 opens during the 1-knocks before 2-knock i with
    mass w_i = q1^π_{i-1} - q1^π_i, so u_j = q1^π_j + S_j where
    S_j = q2 (S_{j-1} + w_j), and the belief before 2-knock j is
    q1^π_j / u_{j-1}. The expectation is Σ_j (π_j - π_{j-1} + c) u_{j-1},
    truncated once u_j (π_j + c j + (t_max + c) / (p2 (1 - x_max))) < tol.

    Raises:
        DivergenceError: the sequence ends or stops knocking door 1 while
            the belief stays pinned near 1
    """
    tol = settings.DEFAULT_TOL if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    horizon_cap = settings.TWO_DOOR_HORIZON_CAP if horizon_cap is None else horizon_cap
    if horizon_cap < 1:
        raise ValueError("horizon_cap must be at least 1")
    log_q1 = math.log1p(-params.p1)
    q2, p2, c = params.q2, params.p2, params.c

    terms: List[float] = []
    pi_prev, u_prev, state, closed_prev = 0.0, 1.0, 0.0, 1.0
    start, chunk = 1, _FIRST_CHUNK

    while start <= horizon_cap:
        pis = seq.positions(start, min(start + chunk, horizon_cap + 1))
        if pis.size == 0:
            raise DivergenceError(
                f"{seq.name} ends after {start - 1} 2-knocks with probability "
                f"{u_prev:.3g} of not being finished"
            )
        steps = np.diff(np.concatenate([[pi_prev], pis]))
        if np.any(steps < 0):
            raise ValueError(f"{seq.name}: cumulative 1-knock times must be non-decreasing")

        closed = np.exp(pis * log_q1)
        opened = np.concatenate([[closed_prev], closed[:-1]]) * -np.expm1(steps * log_q1)
        S, _ = lfilter([q2], [1.0, -q2], opened, zi=[q2 * state])
        u = closed + S
        u_before = np.concatenate([[u_prev], u[:-1]])

        terms.append(math.fsum((steps + c) * u_before))

        with np.errstate(divide="ignore", invalid="ignore"):
            beliefs = np.where(u_before > 0, closed / u_before, 0.0)
        index = start + pis.size - 1
        x_max = float(np.max(beliefs))
        t_max = float(np.max(steps))
        room = p2 * (1.0 - x_max)
        residual = (
            u[-1] * (pis[-1] + c * index + (t_max + c) / room) if room > 0 else math.inf
        )
        if u[-1] <= 0.0 or residual < tol:
            value = math.fsum(terms)
            logger.info(f"E[{seq.name}] = {value:.12g} after {index} 2-knocks")
            return value
        if start > 1 and t_max == 0.0 and room <= 0.0:
            raise DivergenceError(
                f"{seq.name} stops knocking door 1 after {pis[-1]:.6g} 1-knock units "
                "while door 1 may still be closed"
            )

        pi_prev, u_prev, state, closed_prev = float(pis[-1]), float(u[-1]), float(S[-1]), float(closed[-1])
        start += pis.size
        chunk = min(2 * chunk, _MAX_CHUNK)

    raise DivergenceError(
        f"{seq.name} still unfinished with probability {u_prev:.3g} after "
        f"{horizon_cap} 2-knocks"
    )


def conditional_expected_time(
    params: TwoDoorParams, seq: TwoDoorSequence, open_knock: float, tol: float = 1e-12
) -> float:
    """
    E[completion | door 1 opens at 1-knock time `open_knock`]

    Door 2 starts counting at the first 2-knock with π_j >= open_knock.
    """
    q2, p2, c = params.q2, params.p2, params.c
    first = None
    start, chunk = 1, _FIRST_CHUNK
    total, stay = 0.0, 1.0
    while start <= settings.TWO_DOOR_HORIZON_CAP:
        pis = seq.positions(start, start + chunk)
        if pis.size == 0:
            raise DivergenceError(f"{seq.name} ends before door 2 opens")
        idx = np.arange(start, start + pis.size)
        if first is None:
            hits = np.flatnonzero(pis >= open_knock)
            if hits.size:
                first = int(idx[hits[0]])
        if first is not None:
            mask = idx >= first
            counted = idx[mask]
            weights = stay * q2 ** np.arange(counted.size) * p2
            total += float(np.sum(weights * (pis[mask] + c * counted)))
            stay *= q2 ** counted.size
            if stay * (pis[-1] + c * idx[-1] + c / p2 + 1.0) < tol:
                return total
        start += pis.size
        chunk = min(2 * chunk, _MAX_CHUNK)
    raise DivergenceError(f"{seq.name}: door 2 still closed after the 2-knock cap")


# ============================================
# Value Iteration Oracle
# ============================================

def value_iteration(
    params: TwoDoorParams,
    grid_size: Optional[int] = None,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    prefix_length: int = 20,
) -> ValueIterationResult:
    """
    Solve V(x) = min(1 + V(q1 x), c + (q2 + p2 x) V(x / (q2 + p2 x)))

    The grid is geometric over [tol·p2, 1] with linear interpolation in
    log x (values clamp at both ends). Iteration starts from V = 0 and stops
    when the sup-norm change drops below tol. The greedy policy from x = 1
    breaks ties toward door 1.

    Raises:
        NonConvergenceError: no convergence within the iteration cap
    """
    grid_size = settings.VALUE_ITERATION_GRID if grid_size is None else grid_size
    tol = settings.VALUE_ITERATION_TOL if tol is None else tol
    max_iter = settings.VALUE_ITERATION_MAX_ITER if max_iter is None else max_iter
    if grid_size < 1000:
        raise ValueError("grid_size must be at least 1000")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if tol <= 0:
        raise ValueError("tol must be positive")

    q1, q2, p2, c = params.q1, params.q2, params.p2, params.c
    log_grid = np.linspace(math.log(tol * p2), 0.0, grid_size)
    xs = np.exp(log_grid)
    stay = q2 + p2 * xs
    after_one = log_grid + math.log(q1)
    after_two = np.minimum(np.log(xs / stay), 0.0)

    V = np.zeros(grid_size)
    for sweep in range(1, max_iter + 1):
        one = 1.0 + np.interp(after_one, log_grid, V)
        two = c + stay * np.interp(after_two, log_grid, V)
        updated = np.minimum(one, two)
        delta = float(np.max(np.abs(updated - V)))
        V = updated
        if sweep % 1000 == 0:
            logger.debug(f"value iteration sweep {sweep}: delta={delta:.3e}")
        if delta < tol:
            break
    else:
        raise NonConvergenceError(
            f"value iteration still changing by {delta:.3g} after {max_iter} sweeps"
        )

    def value_at(x: float) -> float:
        return float(np.interp(math.log(x), log_grid, V))

    policy: List[int] = []
    x = 1.0
    for _ in range(prefix_length):
        knock_one = 1.0 + value_at(q1 * x)
        knock_two = c + (q2 + p2 * x) * value_at(x / (q2 + p2 * x))
        if knock_one <= knock_two:
            policy.append(1)
            x *= q1
        else:
            policy.append(2)
            x /= q2 + p2 * x

    result = ValueIterationResult(
        value=float(V[-1]), policy_prefix=policy, iterations=sweep, grid_size=grid_size
    )
    logger.info(f"value iteration: V(1)={result.value:.9f} after {sweep} sweeps")
    return result


# ============================================
# Reports
# ============================================

def knock_type_ratio(
    seq: TwoDoorSequence, time_units: float, c: float = 1.0, skip_initial: bool = True
) -> float:
    """
    (#2-knocks) / (#1-knocks) completed within `time_units` of time

    With `skip_initial` the window starts after the initial run of
    1-knocks.
    """
    start_ones = seq.cumulative(1) if skip_initial else 0.0
    end = start_ones + time_units

    twos, index, chunk = 0, 1, _FIRST_CHUNK
    while True:
        pis = seq.positions(index, index + chunk)
        if pis.size == 0:
            break
        finish = pis + c * np.arange(index, index + pis.size)
        done = int(np.count_nonzero(finish <= end))
        twos += done
        if done < pis.size:
            break
        index += pis.size
        chunk = min(2 * chunk, _MAX_CHUNK)

    next_two = seq.positions(twos + 1, twos + 2)
    ones_budget = math.floor(end - c * twos)
    ones = min(float(next_two[0]), ones_budget) if next_two.size else ones_budget
    ones -= start_ones
    if ones <= 0:
        raise ValueError("no 1-knocks completed in the window")
    return twos / ones


def summarize(params: TwoDoorParams, tol: Optional[float] = None) -> TwoDoorSummary:
    """Plan, bounds and prices for one parameter point"""
    plan = solve_semifractional(params)
    rounded = round_to_integer(plan)
    rounded_value = expected_time_two_door(params, rounded, tol)
    baseline = 1.0 / params.p1 + params.c / params.p2
    dependency_price = None
    if params.p1 == params.p2:
        dependency_price = plan.value / (3.0 / params.p1 - 1.0)
    return TwoDoorSummary(
        params=params,
        plan=plan,
        approx=approx_value(params),
        rounded_value=rounded_value,
        upper_bound=plan.value + 1.0,
        feedback_baseline=baseline,
        feedback_price=plan.value / baseline,
        dependency_price=dependency_price,
        rounded_prefix=rounded.knocks(20),
    )
