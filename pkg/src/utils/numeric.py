"""
Small numerical helpers shared by the engine modules
"""
import math
from typing import Tuple

import numpy as np


def log_inv_q(p: float) -> float:
    """
    ln(1/q) for q = 1 - p, accurate for tiny p

    Args:
        p: Success probability in (0, 1)

    Returns:
        -ln(1 - p)
    """
    return -math.log1p(-p)


def log_base_q(x, p: float):
    """
    log_q(x) with q = 1 - p; accepts scalars or numpy arrays

    Args:
        x: Value(s) in (0, 1]
        p: Success probability in (0, 1), q = 1 - p

    Returns:
        ln(x) / ln(q)
    """
    return np.log(x) / math.log1p(-p)


def log1m_base_q(y, p: float):
    """log_q(1 - y), computed through log1p"""
    return np.log1p(-np.asarray(y, dtype=float)) / math.log1p(-p)


def log_inv_q_bracket(q: float) -> Tuple[float, float]:
    """
    Elementary bracket of ln(1/q) for 0 < q < 1

    Returns:
        (1 - q, (1 - q) / q); ln(1/q) lies between the two
    """
    return 1.0 - q, (1.0 - q) / q


def one_minus_pow(p, d: int):
    """
    1 - (1 - p)^d evaluated stably for small p or large d

    Args:
        p: Probability (scalar or array) in [0, 1]
        d: Exponent >= 1
    """
    p = np.asarray(p, dtype=float)
    with np.errstate(divide="ignore"):
        return -np.expm1(d * np.log1p(-p))
