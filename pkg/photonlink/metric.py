"""
Sufficient statistics and the GLRT sequence metric in the log domain.

For a hypothesised bit pattern m over received counts r,

    N_on = sum(m),   R_on = sum(m * r)

and the metric is

    ln(lambda) = R_on * ln(R_on / (N_on * n_b)) - R_on + n_b * N_on

with 0 * ln(0) := 0 and ln(lambda) := 0 when N_on = 0 (the all-noise
hypothesis compared with itself).
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import utils


@dataclass(frozen=True)
class WindowStats:
    n_on: int = 0
    r_on: int = 0

    def __post_init__(self):
        if self.n_on < 0 or self.r_on < 0:
            raise utils.ParameterDomainError(f"negative window statistics {self!r}")
        if self.n_on == 0 and self.r_on != 0:
            raise utils.ParameterDomainError(f"r_on must be 0 when n_on is 0 {self!r}")


EMPTY = WindowStats()


def add_slot(stats, bit, count):
    """Fold one slot into the statistics; 0-bits do not contribute."""
    if bit:
        return WindowStats(stats.n_on + 1, stats.r_on + count)
    return stats


def merge(a, b):
    return WindowStats(a.n_on + b.n_on, a.r_on + b.r_on)


def fold(bits, counts, stats=EMPTY):
    """Statistics of a bit pattern over its counts, starting from stats."""
    for bit, count in zip(bits, counts):
        stats = add_slot(stats, bit, count)
    return stats


def _log_metric(n_on, r_on, n_b):
    # unchecked form used inside the detectors
    if n_on == 0:
        return 0.0
    if r_on == 0:
        return n_b * n_on
    return r_on * math.log(r_on / (n_on * n_b)) - r_on + n_b * n_on


@utils.check_positive('n_b')
def log_metric(stats, n_b):
    """
    Natural log of the GLRT decision metric for the given statistics.

    :param stats: WindowStats of the hypothesised pattern
    :param n_b: mean background count per slot, > 0
    :return: float, finite for every valid WindowStats
    """
    return _log_metric(stats.n_on, stats.r_on, n_b)


@utils.check_positive('n_b')
def log_metric_array(n_on, r_on, n_b):
    """Vectorised log_metric over arrays of (n_on, r_on)."""
    n_on = np.asarray(n_on, dtype=float)
    r_on = np.asarray(r_on, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        value = special.xlogy(r_on, r_on / (n_on * n_b)) - r_on + n_b * n_on
    return np.where(n_on == 0, 0.0, value)
