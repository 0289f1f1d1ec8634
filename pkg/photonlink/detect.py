#!/usr/bin/env python
"""
Reference receivers.

* genie: per-slot Poisson likelihood-ratio test with the true gain known
* brute force: exhaustive GLRT search over all 2^L patterns of a block
* MSD: the same search in O(L log L) from one sort and two prefix sums
* fixed threshold: count >= threshold, no channel knowledge

Tie rules are global: at an LLR tie the genie decides 1; at a metric tie the
block detectors prefer fewer ones, then the lexicographically smallest
pattern (earliest slot most significant).
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import metric
from . import utils


_logger = logging.getLogger(__name__)


MAX_BRUTE_FORCE_LENGTH = 20


@dataclass(frozen=True)
class BlockDecision:
    bits: tuple
    log_metric: float
    n_on: int


#########
# Genie #
#########

def _genie_signal(h, params):
    return params.n_s * np.asarray(h, dtype=float)


@utils.check_positive('h')
def genie_detect(count, h, params):
    """
    Decide 1 iff count * ln(1 + n_s h / n_b) >= n_s h.

    Vectorises over count and h; scalar inputs give a python int.
    """
    signal = _genie_signal(h, params)
    decision = (np.asarray(count) * np.log1p(signal / params.n_b) >= signal).astype(np.int8)
    if decision.ndim == 0:
        return int(decision)
    return decision


@utils.check_positive('h')
def genie_threshold(h, params):
    """
    Smallest count the genie decides as 1.

    Equals ceil(n_s h / ln(1 + n_s h / n_b)) except where that quotient is an
    exact integer, where the tie rule lowers it by one. Zero when n_s = 0.
    """
    signal = _genie_signal(h, params)
    slope = np.log1p(signal / params.n_b)
    with np.errstate(divide='ignore', invalid='ignore'):
        tau = np.where(slope > 0, np.ceil(signal / slope), 0.0)
    # the quotient is rounded; settle it against the decision rule itself
    tau = np.where((tau >= 1) & ((tau - 1) * slope >= signal), tau - 1, tau)
    tau = np.where(tau * slope < signal, tau + 1, tau)
    tau = tau.astype(np.int64)
    if tau.ndim == 0:
        return int(tau)
    return tau


@utils.check_positive('h')
def genie_bep_given_h(h, params):
    """
    Bit error probability of the genie receiver at gain h, equiprobable bits:

        1/2 [P(Pois(n_b) >= tau) + P(Pois(n_s h + n_b) < tau)]
    """
    tau = genie_threshold(h, params)
    signal = _genie_signal(h, params)
    bep = 0.5 * (stats.poisson.sf(tau - 1, params.n_b)
                 + stats.poisson.cdf(tau - 1, signal + params.n_b))
    if np.ndim(bep) == 0:
        return float(bep)
    return bep


###################
# Block detectors #
###################

def _decision(bits, counts, n_b):
    bits = utils.bits_to_tuple(bits)
    window = metric.fold(bits, (int(c) for c in counts))
    return BlockDecision(bits=bits, log_metric=metric.log_metric(window, n_b), n_on=window.n_on)


def _as_block(counts):
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1 or counts.size == 0:
        raise utils.ParameterDomainError("a block needs at least one count")
    return counts


@utils.check_positive('n_b')
def brute_force_detect(counts, n_b):
    """
    Exhaustive GLRT search over every pattern of the block.

    Oracle use only: the block length is limited to MAX_BRUTE_FORCE_LENGTH.
    """
    counts = _as_block(counts)
    length = counts.size
    if length > MAX_BRUTE_FORCE_LENGTH:
        raise utils.ParameterDomainError(
            f"brute force is limited to blocks of {MAX_BRUTE_FORCE_LENGTH} slots (got {length})")

    index = np.arange(1 << length, dtype=np.int64)
    n_on = np.zeros(index.size, dtype=np.int64)
    r_on = np.zeros(index.size, dtype=np.int64)
    for slot in range(length):
        bit = (index >> (length - 1 - slot)) & 1
        n_on += bit
        r_on += bit * counts[slot]
    metrics = metric.log_metric_array(n_on, r_on, n_b)

    # highest metric, then fewest ones, then smallest pattern value
    best = np.lexsort((index, n_on, -metrics))[0]
    bits = (best >> np.arange(length - 1, -1, -1)) & 1
    return _decision(bits, counts, n_b)


def msd_detect_blocks(blocks, n_b, prefer_fewer_ones=True):
    """
    Sort-based GLRT search over many blocks at once.

    At a fixed n_on the metric is convex in r_on, so the best n-subset is
    either the n largest or the n smallest counts. Each block therefore needs
    only its 2L + 1 prefix-sum candidates.

    :param blocks: (B, L) array of counts
    :param n_b: mean background count, > 0
    :param prefer_fewer_ones: metric-tie rule; False exists only as a fault
        injection for the validation suite
    :return: (B, L) int8 array of decided bits
    """
    counts = np.asarray(blocks, dtype=np.int64)
    n_blocks, length = counts.shape
    rows = np.arange(n_blocks)
    slots = np.broadcast_to(np.arange(length), counts.shape)

    # ties within equal counts put the later slot first
    descending = np.lexsort((-slots, -counts), axis=-1)
    ascending = np.lexsort((-slots, counts), axis=-1)

    zeros = np.zeros((n_blocks, 1), dtype=np.int64)
    top = np.hstack([zeros, np.cumsum(np.take_along_axis(counts, descending, axis=1), axis=1)])
    bottom = np.hstack([zeros, np.cumsum(np.take_along_axis(counts, ascending, axis=1), axis=1)])
    sizes = np.arange(length + 1)
    top_metric = metric.log_metric_array(sizes, top, n_b)
    bottom_metric = metric.log_metric_array(sizes, bottom, n_b)
    bottom_metric[:, 0] = -np.inf

    best = np.maximum(top_metric.max(axis=1), bottom_metric.max(axis=1))[:, None]
    hit = (top_metric == best) | (bottom_metric == best)
    if prefer_fewer_ones:
        size = np.argmax(hit, axis=1)
    else:
        size = length - np.argmax(hit[:, ::-1], axis=1)

    top_bits = np.argsort(descending, axis=1) < size[:, None]
    bottom_bits = np.argsort(ascending, axis=1) < size[:, None]
    use_top = top_metric[rows, size] == best[:, 0]
    use_bottom = bottom_metric[rows, size] == best[:, 0]

    # both candidates tie: keep the lexicographically smaller pattern
    differ = top_bits != bottom_bits
    first = np.argmax(differ, axis=1)
    top_smaller = ~differ.any(axis=1) | ~top_bits[rows, first]
    take_top = use_top & (~use_bottom | top_smaller)
    return np.where(take_top[:, None], top_bits, bottom_bits).astype(np.int8)


@utils.check_positive('n_b')
def msd_detect(counts, n_b, prefer_fewer_ones=True):
    """
    GLRT block decision for one block in O(L log L).

    :param counts: the L received counts of the block
    :param n_b: mean background count, > 0
    :return: BlockDecision whose log_metric equals the brute-force maximum
    """
    counts = _as_block(counts)
    bits = msd_detect_blocks(counts[None, :], n_b, prefer_fewer_ones)[0]
    return _decision(bits, counts, n_b)


@utils.check_positive('threshold')
def fixed_threshold_detect(count, threshold):
    """1 iff count >= threshold. Vectorises over count."""
    decision = (np.asarray(count) >= threshold).astype(np.int8)
    if decision.ndim == 0:
        return int(decision)
    return decision
