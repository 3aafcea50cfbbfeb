"""
Price of lacking feedback for similar doors

For d doors sharing one fundamental distribution the price is of the
order E[max(X_1, ..., X_d)] / E[X_1], where X_i are the i.i.d. opening
knock counts.
"""
import math
from typing import Optional

import numpy as np

from src.core.config import settings
from src.core.exceptions import HorizonExceededError
from src.engine.evaluator import expected_time, feedback_baseline
from src.engine.planner import a_simp
from src.models.configurations import DoorConfiguration, ensure_valid
from src.models.distributions import BaseDistribution
from src.models.schemas import PriceReport
from src.utils.logger import logger
from src.utils.numeric import one_minus_pow

_INITIAL_HORIZON = 64


def expected_max_iid(dist: BaseDistribution, d: int, tol: Optional[float] = None) -> float:
    """
    E[max of d i.i.d. opening counts] = Σ_n 1 - (1 - p(n))^d

    Terms below the horizon H are summed directly; the tail is replaced by
    d·S1(H) - C(d,2)·S2(H) with S_k(H) = Σ_{n≥H} p(n)^k, whose error is at
    most C(d,3)·S3(H). H doubles until that error drops below tol.

    Raises:
        HorizonExceededError: the tail bound needs a horizon above the cap
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    tol = settings.DEFAULT_TOL if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")

    pairs, triples = math.comb(d, 2), math.comb(d, 3)
    horizon = _INITIAL_HORIZON
    while triples * dist.tail_sum(horizon, 3) >= tol:
        if horizon >= settings.HORIZON_CAP:
            raise HorizonExceededError(
                f"E[max] tail of {dist.label} for d={d} needs more than {settings.HORIZON_CAP} terms"
            )
        horizon = min(2 * horizon, settings.HORIZON_CAP)

    head = one_minus_pow(dist.survival_array(np.arange(horizon)), d)
    tail = d * dist.tail_sum(horizon, 1) - pairs * dist.tail_sum(horizon, 2)
    logger.debug(f"E[max] {dist.label} d={d}: horizon={horizon}, tail={tail:.3e}")
    return math.fsum(head) + max(tail, 0.0)


def kappa(dist: BaseDistribution, d: int) -> int:
    """Smallest n with p(n) < 1/d"""
    if d < 1:
        raise ValueError("d must be at least 1")
    threshold = 1.0 / d
    block, start = 256, 0
    while True:
        ns = np.arange(start, start + block)
        below = np.flatnonzero(dist.survival_array(ns) < threshold)
        if below.size:
            return int(ns[below[0]])
        start += block
        block *= 2


def lm_max_bound(dist: BaseDistribution, d: int, tol: Optional[float] = None) -> float:
    """κ + d·Σ_{n≥κ} p(n), within a constant factor of E[max]"""
    k = kappa(dist, d)
    return k + d * dist.tail_sum(k, 1)


def price_report(dist: BaseDistribution, d: int, tol: Optional[float] = None) -> PriceReport:
    """E[X_1], E[max], κ, the κ bound and their ratio for d similar doors"""
    e_single = dist.mean(tol)
    e_max = expected_max_iid(dist, d, tol)
    report = PriceReport(
        d=d,
        e_single=e_single,
        e_max=e_max,
        kappa=kappa(dist, d),
        lm_max_bound=lm_max_bound(dist, d, tol),
        price=e_max / e_single,
    )
    logger.info(f"price {dist.label} d={d}: {report.price:.6g}")
    return report


def upper_price_bound(config: DoorConfiguration, tol: Optional[float] = None) -> float:
    """
    T(A_simp) / Σ E_i under the configuration's own dependency

    Round robin spends at most d knocks per effective knock, so the ratio
    never exceeds d.
    """
    ensure_valid(config)
    return expected_time(config, a_simp(config.d), tol) / feedback_baseline(config)
