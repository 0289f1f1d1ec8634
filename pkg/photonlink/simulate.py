#!/usr/bin/env python
"""
Monte Carlo BER estimation.

A BER point is simulated as a sequence of batches. Batch k of grid point g
draws bits, gains and counts from SeedSequence(seed, spawn_key=(g, k)), so
every receiver at a grid point sees the same channel realisations. Shards are
worker processes that run batches in waves; results are folded in batch order
and the stopping rule is applied to that ordered prefix, which makes the
totals independent of the shard count.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import channel
from . import detect
from . import utils
from .trellis import TrellisConfig, TrellisDecoder

try:
    from tqdm import tqdm
except ImportError:
    tqdm = None


_logger = logging.getLogger(__name__)


RECEIVER_KINDS = ('genie', 'msd', 'trellis', 'fixed', 'brute')

DEFAULT_BATCH_BITS = 65536


def snr_db(n_s, n_b):
    """Axis label only: 10 log10(n_s / n_b)."""
    if n_s <= 0:
        return -math.inf
    return 10.0 * math.log10(n_s / n_b)


@dataclass(frozen=True)
class ReceiverSpec:
    """
    kind: genie | msd | trellis | fixed | brute
    param: block length (msd, brute), l_m (trellis), threshold (fixed)
    max_depth: trellis ongoing-buffer capacity l
    reanchor_tail: trellis store re-anchoring tail probability, 0 disables
    """
    kind: str
    param: Optional[float] = None
    max_depth: int = 20
    reanchor_tail: float = 1e-4

    def __post_init__(self):
        if self.kind not in RECEIVER_KINDS:
            raise utils.ConfigurationError(f"unknown receiver {self.kind!r}, expected one of {RECEIVER_KINDS}")
        if self.kind == 'genie':
            if self.param is not None:
                raise utils.ConfigurationError("genie takes no parameter")
        elif self.kind == 'fixed':
            if self.param is None or not self.param > 0:
                raise utils.ConfigurationError(f"fixed threshold must be positive (got {self.param!r})")
        else:
            if self.param is None or int(self.param) != self.param or self.param < 1:
                raise utils.ConfigurationError(f"{self.kind} needs an integer parameter >= 1 (got {self.param!r})")
            if self.kind == 'brute' and self.param > detect.MAX_BRUTE_FORCE_LENGTH:
                raise utils.ConfigurationError(
                    f"brute force is limited to L <= {detect.MAX_BRUTE_FORCE_LENGTH} (got {self.param!r})")
        if self.kind == 'trellis':
            TrellisConfig(int(self.param), self.max_depth, self.reanchor_tail)

    @property
    def trellis_config(self):
        return TrellisConfig(int(self.param), self.max_depth, self.reanchor_tail)

    @property
    def block_length(self):
        return int(self.param) if self.kind in ('msd', 'brute') else 1

    @property
    def id(self):
        if self.param is None:
            return self.kind
        value = int(self.param) if self.kind != 'fixed' else self.param
        return f"{self.kind}({value:g})"


@dataclass(frozen=True)
class ChannelSpec:
    model: object
    params: channel.ChannelParams


@dataclass(frozen=True)
class StoppingRule:
    """Halt at min_errors errors or max_bits bits, whichever comes first. 0 disables a limit."""
    min_errors: int = 100
    max_bits: int = 10 ** 8

    def __post_init__(self):
        if self.min_errors < 0 or self.max_bits < 0:
            raise utils.ConfigurationError(f"stopping limits must be non-negative {self!r}")
        if self.min_errors == 0 and self.max_bits == 0:
            raise utils.ConfigurationError("stopping rule needs min_errors >= 1 or max_bits >= 1")

    def done(self, bits, errors):
        return ((self.min_errors and errors >= self.min_errors)
                or (self.max_bits and bits >= self.max_bits))


@dataclass(frozen=True)
class BerPoint:
    receiver: str
    param: float
    n_s: float
    n_b: float
    snr_db: float
    bits: int
    errors: int
    mean_d: Optional[float] = None
    forced_merges: Optional[int] = None
    mean_window: Optional[float] = None
    reanchors: Optional[int] = None
    depth_histogram: dict = field(default_factory=dict)
    batches: int = 0

    @property
    def ber(self):
        return self.errors / self.bits if self.bits else 0.0

    @property
    def ci95(self):
        if not self.bits:
            return 0.0
        ber = self.ber
        return 1.96 * math.sqrt(ber * (1.0 - ber) / self.bits)


@dataclass(frozen=True)
class SweepConfig:
    model: object
    base: channel.ChannelParams
    grid: tuple
    receivers: tuple
    stopping: StoppingRule = StoppingRule()
    seed: int = 1
    shards: int = 1
    batch_bits: int = DEFAULT_BATCH_BITS
    snr_mapping: Callable = snr_db

    def __post_init__(self):
        if not self.grid:
            raise utils.ConfigurationError("sweep grid is empty")
        if not self.receivers:
            raise utils.ConfigurationError("no receivers configured")
        if self.shards < 1:
            raise utils.ConfigurationError(f"shards must be >= 1 (got {self.shards!r})")
        if self.batch_bits < 1:
            raise utils.ConfigurationError(f"batch_bits must be >= 1 (got {self.batch_bits!r})")
        if self.seed < 0:
            raise utils.ConfigurationError(f"seed must be non-negative (got {self.seed!r})")


###########
# Batches #
###########

@dataclass
class _Tally:
    bits: int = 0
    errors: int = 0
    batches: int = 0
    trellis: Optional[object] = None

    def add(self, bits, errors, trellis_stats):
        self.bits += bits
        self.errors += errors
        self.batches += 1
        if trellis_stats is not None:
            self.trellis = trellis_stats if self.trellis is None else self.trellis.combine(trellis_stats)


def _batch_size(batch_bits, block_length, l_c):
    unit = math.lcm(block_length, l_c)
    if unit > batch_bits:
        unit = block_length
    return -(-batch_bits // unit) * unit


def _detect(receiver, counts, gains, params):
    kind = receiver.kind
    if kind == 'genie':
        return detect.genie_detect(counts, gains, params), None
    if kind == 'fixed':
        return detect.fixed_threshold_detect(counts, receiver.param), None
    if kind == 'msd':
        blocks = counts.reshape(-1, receiver.block_length)
        return detect.msd_detect_blocks(blocks, params.n_b).ravel(), None
    if kind == 'brute':
        blocks = counts.reshape(-1, receiver.block_length)
        return np.array([detect.brute_force_detect(b, params.n_b).bits for b in blocks], dtype=np.int8).ravel(), None
    decoder = TrellisDecoder(receiver.trellis_config, params.n_b)
    return np.asarray(decoder.decode(counts.tolist()), dtype=np.int8), decoder.stats


def simulate_batch(receiver, channel_spec, n_bits, seed_sequence):
    """
    Simulate one batch from its own stream.

    :return: (bits, errors, TrellisStats or None)
    """
    rng = np.random.default_rng(seed_sequence)
    bits = rng.integers(0, 2, n_bits, dtype=np.int8)
    gains = channel.GainProcess(channel_spec.model, channel_spec.params.l_c, rng).gains(n_bits)
    counts = channel.transmit(bits, gains, channel_spec.params, rng)
    decisions, trellis_stats = _detect(receiver, counts, gains, channel_spec.params)
    errors = int(np.count_nonzero(decisions != bits))
    return n_bits, errors, trellis_stats


def _simulate_batch_args(args):
    return simulate_batch(*args)


#############
# BER point #
#############

def _check_compatible(receiver, channel_spec, stopping):
    length = receiver.block_length
    if stopping.max_bits and length > stopping.max_bits:
        raise utils.ConfigurationError(
            f"{receiver.id} needs blocks of {length} bits but max_bits is {stopping.max_bits}")
    if receiver.kind == 'genie' and channel_spec.params.n_s == 0:
        _logger.warning("genie receiver with n_s = 0: the likelihood ratio is identically 0, every slot decides 1")


def run_ber_point(receiver, channel_spec, stopping=StoppingRule(), seed=1, shards=1,
                  batch_bits=DEFAULT_BATCH_BITS, grid_index=0, snr_mapping=snr_db,
                  executor=None):
    """
    Estimate the BER of one receiver at one channel operating point.

    :param receiver: ReceiverSpec
    :param channel_spec: ChannelSpec
    :param stopping: StoppingRule
    :param seed: master seed
    :param shards: number of batches run concurrently
    :param batch_bits: target batch size, rounded to whole blocks and coherence blocks
    :param grid_index: position in the sweep, part of every batch's stream key
    :param executor: optional concurrent.futures executor to reuse
    :return: BerPoint, identical for identical (seed, grid_index, stopping, batch_bits)
    """
    if shards < 1:
        raise utils.ConfigurationError(f"shards must be >= 1 (got {shards!r})")
    _check_compatible(receiver, channel_spec, stopping)
    params = channel_spec.params
    size = _batch_size(batch_bits, receiver.block_length, params.l_c)

    def batch_bits_at(k):
        start = k * size
        if not stopping.max_bits:
            return size
        if start >= stopping.max_bits:
            return 0
        remaining = stopping.max_bits - start
        return min(size, -(-remaining // receiver.block_length) * receiver.block_length)

    own_executor = None
    if executor is None and shards > 1:
        executor = own_executor = ProcessPoolExecutor(max_workers=shards)
    try:
        tally = _Tally()
        k = 0
        done = False
        while not done:
            wave = [(receiver, channel_spec, batch_bits_at(k + i),
                     np.random.SeedSequence(seed, spawn_key=(grid_index, k + i)))
                    for i in range(shards) if batch_bits_at(k + i)]
            if not wave:
                break
            mapper = executor.map if executor is not None else map
            for n_bits, errors, trellis_stats in mapper(_simulate_batch_args, wave):
                tally.add(n_bits, errors, trellis_stats)
                if stopping.done(tally.bits, tally.errors):
                    done = True
                    break
            _logger.debug("%s n_s=%g: %d batches, %d bits, %d errors",
                          receiver.id, params.n_s, tally.batches, tally.bits, tally.errors)
            k += len(wave)
    finally:
        if own_executor is not None:
            own_executor.shutdown()

    extra = {}
    if tally.trellis is not None:
        stats = tally.trellis
        extra = dict(mean_d=stats.mean_depth,
                     forced_merges=stats.forced_merges,
                     mean_window=stats.mean_window,
                     reanchors=stats.reanchors,
                     depth_histogram=dict(sorted(stats.depth_histogram.items())))
        if stats.forced_merges:
            _logger.warning("%s n_s=%g: %d forced merges in %d steps",
                            receiver.id, params.n_s, stats.forced_merges, stats.steps)
        if stats.mean_window >= params.l_c / 10:
            _logger.warning("%s n_s=%g: mean window %.1f is not small against l_c=%d",
                            receiver.id, params.n_s, stats.mean_window, params.l_c)

    point = BerPoint(receiver=receiver.id, param=params.n_s, n_s=params.n_s, n_b=params.n_b,
                     snr_db=snr_mapping(params.n_s, params.n_b), bits=tally.bits,
                     errors=tally.errors, batches=tally.batches, **extra)
    _logger.info("%s n_s=%g: %d errors in %d bits (BER %.3e)",
                 point.receiver, point.n_s, point.errors, point.bits, point.ber)
    return point


def _progress(iterable, total, desc):
    if tqdm is None:
        return iterable
    return tqdm(iterable, total=total, desc=desc)


def run_sweep(config, callback=None):
    """
    One BerPoint per (receiver, grid value), ordered by receiver then grid value.

    :param config: SweepConfig
    :param callback: optional f(BerPoint) called as each point completes
    """
    jobs = [(receiver, index, n_s)
            for receiver in config.receivers
            for index, n_s in enumerate(config.grid)]
    executor = ProcessPoolExecutor(max_workers=config.shards) if config.shards > 1 else None
    points = []
    try:
        for receiver, index, n_s in _progress(jobs, len(jobs), "sweep"):
            channel_spec = ChannelSpec(config.model, config.base.with_signal(n_s))
            point = run_ber_point(receiver, channel_spec, config.stopping, config.seed,
                                  config.shards, config.batch_bits, grid_index=index,
                                  snr_mapping=config.snr_mapping, executor=executor)
            points.append(point)
            if callback is not None:
                callback(point)
    finally:
        if executor is not None:
            executor.shutdown()
    return points


################
# Genie bound  #
################

def genie_bep_semi_analytic(model, params, n_gain_samples=200000, seed=0):
    """
    Genie bound: genie_bep_given_h averaged over the fading law.

    Exact for a Constant model; otherwise the mean over n_gain_samples
    gains drawn from a generator seeded with seed.
    """
    if n_gain_samples < 1:
        raise utils.ParameterDomainError(f"n_gain_samples must be >= 1 (got {n_gain_samples!r})")
    if isinstance(model, channel.Constant):
        return detect.genie_bep_given_h(model.h, params)
    gains = model.sample(np.random.default_rng(seed), n_gain_samples)
    return float(np.mean(detect.genie_bep_given_h(gains, params)))


def genie_bound_curve(model, base, grid, n_gain_samples=200000, seed=0):
    """Semi-analytic genie BEP at every n_s of the grid."""
    return [genie_bep_semi_analytic(model, base.with_signal(n_s), n_gain_samples, seed)
            for n_s in grid]


def crossing_snr(snr, ber, target):
    """
    SNR (dB) at which a BER curve crosses target.

    Interpolates log10(BER) linearly between the first bracketing pair of
    points; None if the curve never crosses.
    """
    pairs = [(x, y) for x, y in zip(snr, ber) if y > 0 and math.isfinite(x)]
    for (x0, y0), (x1, y1) in zip(pairs, pairs[1:]):
        if y0 >= target >= y1:
            if y0 == y1:
                return x0
            fraction = (math.log10(y0) - math.log10(target)) / (math.log10(y0) - math.log10(y1))
            return x0 + fraction * (x1 - x0)
    return None
