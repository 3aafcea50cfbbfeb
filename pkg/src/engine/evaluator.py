"""
Exact evaluation of knock sequences

Expected completion times are sums of the survival curve
SC(t) = P(some door still closed after t knocks), truncated once the
residual mass bound falls below the tolerance. Three evaluators share the
truncation loop:

- independent doors: SC(t) = 1 - Π_i (1 - p_i(π_i(t)))
- cascading chains: forward convolution of door opening-time distributions
- general gated DAGs: forward DP over the joint opening times of the doors
  still needed by later doors

Each evaluator also reports, per door, the expected number of effective
knocks the door still needs after the horizon; the truncation bound is
built from those.
"""
import math
from collections import defaultdict
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.core.config import settings
from src.core.exceptions import (
    ConfigurationError,
    DivergenceError,
    HorizonExceededError,
    StateSpaceOverflowError,
)
from src.models.configurations import DependencyMode, DoorConfiguration, KnockSequence, ensure_valid
from src.models.schemas import SurvivalCurve
from src.utils.logger import logger

_INITIAL_HORIZON = 64

# (SC(0..H), expected knocks each door still needs after H)
CurveValues = Tuple[np.ndarray, np.ndarray]


def _limit(name: str, value: Optional[int], default: int) -> int:
    value = default if value is None else value
    if value < 1:
        raise ValueError(f"{name} must be at least 1, got {value}")
    return int(value)


# ============================================
# Survival Curves
# ============================================

def _is_independent(config: DoorConfiguration) -> bool:
    return all(not preds for preds in config.predecessors())


def _is_chain(config: DoorConfiguration) -> bool:
    return all(
        preds == (frozenset({i - 1}) if i > 0 else frozenset())
        for i, preds in enumerate(config.predecessors())
    )


def _tail_sums(door, knocks_available: int) -> np.ndarray:
    """E[(N - e)^+] = Σ_{m≥e} p(m) for e = 0..knocks_available"""
    beyond = door.tail_sum(knocks_available)
    surv = door.survival_array(np.arange(knocks_available))
    tails = np.empty(knocks_available + 1)
    tails[:-1] = np.cumsum(surv[::-1])[::-1] + beyond
    tails[-1] = beyond
    return tails


def _expectation(weights: np.ndarray, values: np.ndarray) -> float:
    mask = weights > 0.0
    return float(np.dot(weights[mask], values[mask]))


def _independent_values(config: DoorConfiguration, knocks: np.ndarray) -> CurveValues:
    counts = np.zeros((knocks.size + 1, config.d), dtype=np.int64)
    if knocks.size:
        onehot = np.zeros((knocks.size, config.d), dtype=np.int64)
        onehot[np.arange(knocks.size), knocks - 1] = 1
        counts[1:] = np.cumsum(onehot, axis=0)

    log_open = np.zeros(knocks.size + 1)
    with np.errstate(divide="ignore"):
        for i, door in enumerate(config.doors):
            log_open += np.log1p(-door.survival_array(counts[:, i]))
    needed = np.array([door.tail_sum(int(counts[-1, i])) for i, door in enumerate(config.doors)])
    return np.clip(-np.expm1(log_open), 0.0, 1.0), needed


def _opening_pmf(door, knocks_available: int) -> np.ndarray:
    """P(N = n) for n = 1..knocks_available, indexed from 0"""
    surv = door.survival_array(np.arange(knocks_available + 1))
    return np.maximum(surv[:-1] - surv[1:], 0.0)


def _chain_values(config: DoorConfiguration, knocks: np.ndarray) -> CurveValues:
    horizon = knocks.size
    times = np.arange(horizon + 1)
    needed = np.zeros(config.d)
    # pmf of the opening time of the previous door over knock indices 0..horizon
    previous = np.zeros(horizon + 1)
    previous[0] = 1.0

    for i, door in enumerate(config.doors):
        positions = np.flatnonzero(knocks == i + 1) + 1
        available = positions.size
        before = np.searchsorted(positions, times, side="right")
        # mass of the previous door's opening time grouped by knocks already spent on door i
        grouped = np.bincount(before, weights=previous, minlength=available + 1)
        tails = _tail_sums(door, available)
        unreached = max(1.0 - float(previous.sum()), 0.0)
        needed[i] = _expectation(np.append(grouped, unreached), np.append(tails[::-1], tails[0]))

        current = np.zeros(horizon + 1)
        if available:
            reached = np.convolve(grouped, _opening_pmf(door, available))[:available]
            current[positions] = reached
        previous = current

    return np.clip(1.0 - np.cumsum(previous), 0.0, 1.0), needed


def _dag_values(
    config: DoorConfiguration,
    knocks: np.ndarray,
    state_cap: int,
    transition_cap: Optional[int] = None,
) -> CurveValues:
    transition_cap = _limit("transition_cap", transition_cap, settings.DAG_TRANSITION_CAP)
    horizon = knocks.size
    never = horizon + 1
    preds = config.predecessors()
    last_use = [
        max((i for i in range(config.d) if j in preds[i]), default=-1)
        for j in range(config.d)
    ]
    needed = np.zeros(config.d)
    work = 0

    def overflow(what: str, i: int) -> StateSpaceOverflowError:
        return StateSpaceOverflowError(
            f"DAG evaluation exceeds the {what} at door {i + 1} "
            f"(states cap {state_cap}, transitions cap {transition_cap}, horizon {horizon})"
        )

    frontier: List[int] = []
    # key: (running max of opening times, opening times of frontier doors...)
    states: Dict[Tuple[int, ...], float] = {(0,): 1.0}

    for i, door in enumerate(config.doors):
        positions = np.flatnonzero(knocks == i + 1) + 1
        available = positions.size
        pmf = _opening_pmf(door, available)
        surv = door.survival_array(np.arange(available + 1))
        tails = _tail_sums(door, available)

        keep_i = last_use[i] > i
        next_frontier = [j for j in frontier if last_use[j] > i] + ([i] if keep_i else [])
        slot = {j: k for k, j in enumerate(frontier)}

        if not next_frontier:
            # only the running max survives, so accumulate into a dense array
            dense = np.zeros(never + 1)
            for key, prob in states.items():
                if prob <= 0.0:
                    continue
                running, opened = key[0], key[1:]
                start = max((opened[slot[j]] for j in preds[i]), default=0)
                if start >= never:
                    dense[never] += prob
                    needed[i] += prob * tails[0]
                    work += 1
                    continue
                spent = int(np.searchsorted(positions, start, side="right"))
                remaining = available - spent
                needed[i] += prob * tails[remaining]
                times = positions[spent:]
                weights = prob * pmf[:remaining]
                early = times <= running
                dense[running] += weights[early].sum()
                dense[times[~early]] += weights[~early]
                dense[never] += prob * surv[remaining]
                work += remaining + 1
                if work > transition_cap:
                    raise overflow("transition budget", i)
            states = {(int(t),): float(dense[t]) for t in np.flatnonzero(dense)}
            frontier = []
            continue

        updated: Dict[Tuple[int, ...], float] = defaultdict(float)
        for key, prob in states.items():
            if prob <= 0.0:
                continue
            running, opened = key[0], key[1:]
            start = max((opened[slot[j]] for j in preds[i]), default=0)
            carried = tuple(opened[slot[j]] for j in next_frontier if j != i)

            if start >= never:
                outcomes = [(never, 1.0)]
                needed[i] += prob * tails[0]
            else:
                spent = int(np.searchsorted(positions, start, side="right"))
                remaining = available - spent
                needed[i] += prob * tails[remaining]
                outcomes = [
                    (int(positions[spent + m]), float(pmf[m]))
                    for m in range(remaining)
                    if pmf[m] > 0.0
                ]
                if surv[remaining] > 0.0:
                    outcomes.append((never, float(surv[remaining])))

            for opened_at, weight in outcomes:
                new_key = (max(running, opened_at),) + carried + ((opened_at,) if keep_i else ())
                updated[new_key] += prob * weight

            work += len(outcomes)
            if len(updated) > state_cap:
                raise overflow("joint state cap", i)
            if work > transition_cap:
                raise overflow("transition budget", i)

        states = dict(updated)
        frontier = next_frontier

    completion = np.zeros(horizon + 2)
    for key, prob in states.items():
        completion[key[0]] += prob
    logger.debug(f"DAG evaluation at horizon {horizon}: {len(states)} final states, {work} transitions")
    return np.clip(1.0 - np.cumsum(completion[: horizon + 1]), 0.0, 1.0), needed


def _pad(values: np.ndarray, horizon: int) -> np.ndarray:
    if values.size >= horizon + 1:
        return values
    return np.concatenate([values, np.full(horizon + 1 - values.size, values[-1])])


def _curve(seq: KnockSequence, horizon: int, knocks: np.ndarray, curve: CurveValues) -> SurvivalCurve:
    values, needed = curve
    if values[-1] <= 0.0:
        tail = 0.0
    elif knocks.size < horizon:
        tail = math.inf
    else:
        tail = _residual_bound(seq, horizon, needed)
    return SurvivalCurve(values=_pad(values, horizon).tolist(), tail=tail)


def survival_curve_independent(
    config: DoorConfiguration, seq: KnockSequence, horizon: int
) -> SurvivalCurve:
    """
    Survival curve of `seq` on independent doors for t = 0..horizon

    Raises:
        ConfigurationError: the configuration is not independent
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    ensure_valid(config)
    if not _is_independent(config):
        raise ConfigurationError(
            [f"survival_curve_independent needs independent doors, got {config.mode.value}"]
        )
    knocks = seq.prefix(horizon)
    return _curve(seq, horizon, knocks, _independent_values(config, knocks))


def survival_curve_cascading(
    config: DoorConfiguration,
    seq: KnockSequence,
    horizon: int,
    state_cap: Optional[int] = None,
    transition_cap: Optional[int] = None,
) -> SurvivalCurve:
    """
    Survival curve of `seq` under cascading or DAG-gated dependencies

    Raises:
        ConfigurationError: the configuration is independent
        StateSpaceOverflowError: the DAG needs more joint states or transitions than allowed
    """
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    ensure_valid(config)
    states = _limit("state_cap", state_cap, settings.STATE_SPACE_CAP)
    transitions = _limit("transition_cap", transition_cap, settings.DAG_TRANSITION_CAP)
    knocks = seq.prefix(horizon)
    return _curve(seq, horizon, knocks, _gated_values(config, knocks, states, transitions))


def _gated_values(
    config: DoorConfiguration, knocks: np.ndarray, state_cap: int, transition_cap: int
) -> CurveValues:
    if config.mode == DependencyMode.INDEPENDENT:
        raise ConfigurationError(
            ["cascading evaluation needs a cascading or dag dependency, got independent"]
        )
    if _is_chain(config):
        return _chain_values(config, knocks)
    return _dag_values(config, knocks, state_cap, transition_cap)


# ============================================
# Truncated Expected Times
# ============================================

def _residual_bound(seq: KnockSequence, horizon: int, needed: np.ndarray) -> float:
    """
    Upper bound on Σ_{t>H} SC(t) = E[(C - H)^+]

    After H, door i needs M_i more effective knocks and gets one at least
    every g_i knocks, g_i being the longest wait between its knocks over
    (H/2, 2H]. A door opens at most g_i * M_i knocks after the later of H
    and its predecessors' opening, so E[(C - H)^+] <= Σ_i g_i E[M_i]. The
    bound is exact in form for periodic sequences and holds for any
    sequence whose later gaps stay within the observed ones.
    """
    if not np.any(needed > 0.0):
        return 0.0
    end = 2 * horizon
    ahead = seq.prefix(end)
    if ahead.size < end:
        return math.inf
    half = horizon // 2
    bound = 0.0
    for i, need in enumerate(needed):
        if need <= 0.0:
            continue
        positions = np.flatnonzero(ahead[half:] == i + 1) + half + 1
        if positions.size == 0:
            return math.inf
        gap = int(np.diff(positions, prepend=half, append=end + 1).max())
        bound += gap * float(need)
    return bound


def _neglected_doors(config: DoorConfiguration, knocks: np.ndarray) -> List[int]:
    half = knocks.size // 2
    neglected = []
    for i, door in enumerate(config.doors):
        if np.any(knocks[half:] == i + 1):
            continue
        if door.survival(int(np.count_nonzero(knocks == i + 1))) > 0.0:
            neglected.append(i + 1)
    return neglected


def _truncated_sum(
    config: DoorConfiguration,
    seq: KnockSequence,
    curve: Callable[[np.ndarray], CurveValues],
    tol: float,
    horizon_cap: int,
) -> float:
    if tol <= 0:
        raise ValueError("tol must be positive")
    horizon = min(_INITIAL_HORIZON, horizon_cap)

    while True:
        knocks = seq.prefix(horizon)
        values, needed = curve(knocks)

        if values[-1] <= 0.0:
            return math.fsum(values)

        if knocks.size < horizon:
            raise DivergenceError(
                f"finite sequence {seq.name} ends after {knocks.size} knocks "
                f"with some door still closed (probability {values[-1]:.3g})"
            )

        residual = _residual_bound(seq, horizon, needed)
        logger.debug(f"horizon={horizon} SC(H)={values[-1]:.3e} residual={residual:.3e}")
        if residual < tol:
            return math.fsum(values)

        if horizon >= horizon_cap:
            neglected = _neglected_doors(config, knocks)
            if neglected:
                raise DivergenceError(
                    f"sequence {seq.name} stops knocking on door(s) {neglected} "
                    "while they may still be closed"
                )
            raise HorizonExceededError(
                f"residual mass {residual:.3g} still above tol={tol:g} "
                f"at the horizon cap of {horizon_cap} knocks"
            )
        horizon = min(2 * horizon, horizon_cap)


def expected_time_independent(
    config: DoorConfiguration,
    seq: KnockSequence,
    tol: Optional[float] = None,
    horizon_cap: Optional[int] = None,
) -> float:
    """
    Expected number of knocks until all independent doors are open

    Args:
        config: Independent configuration
        seq: Knock sequence; must keep knocking every door that may be closed
        tol: Absolute truncation tolerance (default settings.DEFAULT_TOL)
        horizon_cap: Largest horizon tried (default settings.HORIZON_CAP)

    Raises:
        DivergenceError: the sequence neglects a door that may be closed
        HorizonExceededError: the tolerance needs more knocks than the cap
    """
    ensure_valid(config)
    if not _is_independent(config):
        raise ConfigurationError(
            [f"expected_time_independent needs independent doors, got {config.mode.value}"]
        )
    value = _truncated_sum(
        config,
        seq,
        lambda knocks: _independent_values(config, knocks),
        settings.DEFAULT_TOL if tol is None else tol,
        _limit("horizon_cap", horizon_cap, settings.HORIZON_CAP),
    )
    logger.info(f"T_independent({seq.name}) = {value:.12g}")
    return value


def expected_time_cascading(
    config: DoorConfiguration,
    seq: KnockSequence,
    tol: Optional[float] = None,
    horizon_cap: Optional[int] = None,
    state_cap: Optional[int] = None,
    transition_cap: Optional[int] = None,
) -> float:
    """
    Expected number of knocks until all doors are open under gating

    Cascading chains use forward convolution of opening-time distributions;
    other DAGs use a joint-state forward DP bounded by `state_cap` joint
    states and `transition_cap` transitions per horizon.

    Raises:
        DivergenceError: the sequence neglects a door that may be closed
        HorizonExceededError: the tolerance needs more knocks than the cap
        StateSpaceOverflowError: the DAG needs more joint states or transitions than the caps
    """
    ensure_valid(config)
    states = _limit("state_cap", state_cap, settings.STATE_SPACE_CAP)
    transitions = _limit("transition_cap", transition_cap, settings.DAG_TRANSITION_CAP)
    value = _truncated_sum(
        config,
        seq,
        lambda knocks: _gated_values(config, knocks, states, transitions),
        settings.CASCADING_TOL if tol is None else tol,
        _limit("horizon_cap", horizon_cap, settings.HORIZON_CAP),
    )
    logger.info(f"T_{config.mode.value}({seq.name}) = {value:.12g}")
    return value


def expected_time(
    config: DoorConfiguration, seq: KnockSequence, tol: Optional[float] = None
) -> float:
    """Dispatch on the dependency mode of `config`"""
    if config.mode == DependencyMode.INDEPENDENT:
        return expected_time_independent(config, seq, tol)
    return expected_time_cascading(config, seq, tol)


def feedback_baseline(config: DoorConfiguration) -> float:
    """Σ_i E_i, the optimal expected time when door states are observable"""
    return math.fsum(door.mean() for door in config.doors)


# ============================================
# Partial Sum Bounds
# ============================================

def partial_sum_bounds(
    survival: Sequence[float], checkpoints: Sequence[int]
) -> Tuple[float, float]:
    """
    Bracket E[X] = Σ_n P(X > n) using a non-increasing survival curve
    sampled at strictly increasing checkpoints a_1 < a_2 < ...

    Returns:
        (Σ (a_{n+1} - a_n) P(X > a_{n+1}), a_1 + Σ (a_{n+1} - a_n) P(X > a_n))
        restricted to checkpoints inside the curve
    """
    points = [a for a in checkpoints if a < len(survival)]
    if any(b <= a for a, b in zip(points, points[1:])):
        raise ValueError("checkpoints must be strictly increasing")
    low = math.fsum((b - a) * survival[b] for a, b in zip(points, points[1:]))
    high = (points[0] if points else 0) + math.fsum(
        (b - a) * survival[a] for a, b in zip(points, points[1:])
    )
    return low, high
