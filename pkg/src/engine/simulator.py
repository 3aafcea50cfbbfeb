"""
Monte Carlo replay of knock sequences

Each trial fixes its randomness up front as the opening counts N_i drawn
by inverse CDF, one per door. Replaying a sequence then only counts
effective knocks: a knock on door i is effective while door i is closed
and all of its predecessors are open. Sharing the draws across dependency
structures couples the trials, so completion times are pathwise ordered
along inclusion of the edge sets.

Trials run in fixed-size blocks whose random streams are keyed by
(seed, block index); results do not depend on the number of threads.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from src.core.config import settings
from src.core.exceptions import SimulationTimeoutError
from src.models.configurations import DagDependency, DependencyMode, DoorConfiguration, KnockSequence, ensure_valid
from src.models.schemas import SimulationEstimate, TrialOutcome
from src.utils.logger import logger

Z_99 = 2.576

EdgeSet = Union[DependencyMode, DagDependency, str, dict]


# ============================================
# Random Streams
# ============================================

def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for one block of trials"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def draw_open_counts(config: DoorConfiguration, rng: np.random.Generator, trials: int) -> np.ndarray:
    """N[trial, door] opening counts, one column per door"""
    return np.stack(
        [door.sample_open_counts(rng, trials) for door in config.doors], axis=1
    )


# ============================================
# Replay
# ============================================

def replay(
    predecessors: Sequence[frozenset],
    seq: KnockSequence,
    counts: np.ndarray,
    cap: int,
) -> np.ndarray:
    """
    Replay `seq` on pre-drawn opening counts

    Returns:
        Integer array (trials, d) with the knock index at which each door
        opened, 0 for doors still closed at the cap
    """
    trials, d = counts.shape
    effective = np.zeros((trials, d), dtype=np.int64)
    opened_at = np.zeros((trials, d), dtype=np.int64)
    gates = [np.asarray(sorted(preds), dtype=np.int64) for preds in predecessors]
    active = np.arange(trials)

    for knock, door in enumerate(seq, start=1):
        if knock > cap or active.size == 0:
            break
        i = door - 1
        candidates = active[opened_at[active, i] == 0]
        if gates[i].size and candidates.size:
            candidates = candidates[np.all(opened_at[np.ix_(candidates, gates[i])] > 0, axis=1)]
        if candidates.size == 0:
            continue
        effective[candidates, i] += 1
        newly = candidates[effective[candidates, i] >= counts[candidates, i]]
        if newly.size:
            opened_at[newly, i] = knock
            active = active[np.any(opened_at[active] == 0, axis=1)]

    return opened_at


def _completion(opened_at: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    finished = np.all(opened_at > 0, axis=1)
    return opened_at.max(axis=1), finished


def simulate_trial(
    config: DoorConfiguration,
    seq: KnockSequence,
    rng: np.random.Generator,
    cap: Optional[int] = None,
) -> Optional[TrialOutcome]:
    """
    One replay of `seq`; None when some door is still closed at the cap
    """
    cap = settings.HORIZON_CAP if cap is None else cap
    if cap < 1:
        raise ValueError("cap must be at least 1")
    ensure_valid(config)
    opened_at = replay(config.predecessors(), seq, draw_open_counts(config, rng, 1), cap)[0]
    if np.any(opened_at == 0):
        return None
    return TrialOutcome(
        completion_knock=int(opened_at.max()),
        per_door_open_knock=[int(k) for k in opened_at],
    )


def _run_block(
    config: DoorConfiguration, seq: KnockSequence, seed: int, block: int, size: int, cap: int
) -> Tuple[np.ndarray, int]:
    rng = block_rng(seed, block)
    opened_at = replay(config.predecessors(), seq.clone(), draw_open_counts(config, rng, size), cap)
    completion, finished = _completion(opened_at)
    return completion[finished], int(size - np.count_nonzero(finished))


def estimate_expected_time(
    config: DoorConfiguration,
    seq: KnockSequence,
    trials: Optional[int] = None,
    seed: Optional[int] = None,
    threads: int = 1,
    cap: Optional[int] = None,
    block_size: Optional[int] = None,
) -> SimulationEstimate:
    """
    Sample mean of the completion knock with a 99% normal confidence half-width

    Raises:
        SimulationTimeoutError: some trials did not finish within the cap
    """
    trials = settings.DEFAULT_TRIALS if trials is None else trials
    seed = settings.DEFAULT_SEED if seed is None else seed
    cap = settings.HORIZON_CAP if cap is None else cap
    block_size = settings.SIMULATION_BLOCK_SIZE if block_size is None else block_size
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if cap < 1:
        raise ValueError("cap must be at least 1")
    if block_size < 1:
        raise ValueError("block_size must be at least 1")
    if threads < 1:
        raise ValueError("threads must be at least 1")
    ensure_valid(config)

    sizes = [min(block_size, trials - start) for start in range(0, trials, block_size)]
    jobs = [(config, seq, seed, block, size, cap) for block, size in enumerate(sizes)]
    if threads == 1:
        results = [_run_block(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda job: _run_block(*job), jobs))

    timeouts = sum(missing for _, missing in results)
    if timeouts:
        rate = timeouts / trials
        raise SimulationTimeoutError(
            f"{timeouts} of {trials} trials of {seq.name} still unfinished after {cap} knocks",
            timeout_rate=rate,
        )

    completions = np.concatenate([done for done, _ in results]).astype(float)
    mean = float(np.mean(completions))
    sd = float(np.std(completions, ddof=1)) if trials > 1 else 0.0
    estimate = SimulationEstimate(
        mean=mean,
        ci99=Z_99 * sd / math.sqrt(trials),
        trials=trials,
        timeout_rate=0.0,
        seed=seed,
    )
    logger.info(f"simulated {seq.name}: mean={estimate.mean:.6g} ± {estimate.ci99:.3g}")
    return estimate


# ============================================
# Coupled Dominance
# ============================================

def _ordered_configs(doors: Sequence, edge_sets: Sequence[EdgeSet]) -> List[DoorConfiguration]:
    configs = [
        ensure_valid(DoorConfiguration.model_validate({"doors": list(doors), "dependency": edges}))
        for edges in edge_sets
    ]
    for smaller, larger in zip(configs, configs[1:]):
        if any(not a <= b for a, b in zip(smaller.predecessors(), larger.predecessors())):
            raise ValueError("edge sets must be ordered by inclusion")
    return configs


def coupled_completions(
    doors: Sequence,
    edge_sets: Sequence[EdgeSet],
    seq: KnockSequence,
    rng: np.random.Generator,
    trials: int,
    cap: Optional[int] = None,
) -> np.ndarray:
    """
    Completion knocks (trials, len(edge_sets)) under shared opening counts

    Raises:
        SimulationTimeoutError: a trial did not finish under some edge set
    """
    cap = settings.HORIZON_CAP if cap is None else cap
    if cap < 1:
        raise ValueError("cap must be at least 1")
    configs = _ordered_configs(doors, edge_sets)
    counts = draw_open_counts(configs[0], rng, trials)

    columns = []
    for config in configs:
        completion, finished = _completion(replay(config.predecessors(), seq.clone(), counts, cap))
        if not np.all(finished):
            missing = int(trials - np.count_nonzero(finished))
            raise SimulationTimeoutError(
                f"{missing} coupled trials unfinished under {config.mode.value} after {cap} knocks",
                timeout_rate=missing / trials,
            )
        columns.append(completion)
    return np.stack(columns, axis=1)


def coupled_dominance_trial(
    doors: Sequence,
    edge_sets: Sequence[EdgeSet],
    seq: KnockSequence,
    rng: np.random.Generator,
    cap: Optional[int] = None,
) -> List[int]:
    """One coupled trial: completion knocks in edge-set order"""
    return [int(k) for k in coupled_completions(doors, edge_sets, seq, rng, 1, cap)[0]]
