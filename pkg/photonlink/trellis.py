"""
Two-state trellis search over the GLRT metric with a selective store.

Each survivor splits into a detected part, shared by both survivors and
summarised by the counts of its most recent l_m 1-decisions, and an ongoing
part of length d that is still undecided. A candidate's metric is evaluated
on (store statistics + ongoing statistics). Bits are emitted once both
survivors agree on a prefix.

The store goes stale when the gain drops sharply at a coherence-block
boundary: every 1-candidate then scores below the 0-candidate and, since only
1-decisions refresh the store, the decoder would stay locked on 0 for the rest
of the block. A 0-decision whose count is implausible as background alone
(P(X >= count) <= reanchor_tail for X ~ Poisson(n_b)) re-anchors the store on
that count.
"""
import collections
import logging
import math
from dataclasses import dataclass, field

from scipy import stats

from . import metric
from . import utils


_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrellisConfig:
    """
    l_m: selective-store capacity; max_depth: ongoing-buffer capacity l;
    reanchor_tail: background tail probability that re-anchors the store, 0 disables.
    """
    l_m: int
    max_depth: int = 20
    reanchor_tail: float = 1e-4

    def __post_init__(self):
        if int(self.l_m) != self.l_m or self.l_m < 1:
            raise utils.ParameterDomainError(f"l_m must be an integer >= 1 (got {self.l_m!r})")
        if int(self.max_depth) != self.max_depth or self.max_depth < 2:
            raise utils.ParameterDomainError(f"max_depth must be an integer >= 2 (got {self.max_depth!r})")
        if not 0 <= self.reanchor_tail < 1:
            raise utils.ParameterDomainError(f"reanchor_tail must be in [0, 1) (got {self.reanchor_tail!r})")


def reanchor_count(tail, n_b):
    """
    Smallest count c with P(X >= c) <= tail for background-only X ~ Poisson(n_b).

    :return: int, or math.inf when tail is 0
    """
    if not tail:
        return math.inf
    return int(stats.poisson.isf(tail, n_b)) + 1


class SelectiveStore:
    """FIFO of the counts of the most recent 1-decisions, oldest evicted first."""

    def __init__(self, capacity):
        self.capacity = capacity
        self.total = 0
        self._counts = collections.deque()
        self._positions = collections.deque()

    def __len__(self):
        return len(self._counts)

    def push(self, count, position):
        if len(self._counts) == self.capacity:
            self.total -= self._counts.popleft()
            self._positions.popleft()
        self._counts.append(count)
        self._positions.append(position)
        self.total += count

    def reset(self, count, position):
        """Drop every stored count and keep only this one."""
        self._counts.clear()
        self._positions.clear()
        self.total = 0
        self.push(count, position)

    @property
    def stats(self):
        return metric.WindowStats(len(self._counts), self.total)

    @property
    def counts(self):
        return tuple(self._counts)

    @property
    def oldest_position(self):
        """Stream index of the oldest stored 1-decision, None when empty."""
        return self._positions[0] if self._positions else None


class Survivor:
    """Ongoing part of the best path into one node."""
    __slots__ = ('bits', 'n_on', 'r_on', 'metric')

    def __init__(self, bits, n_on, r_on, metric_value):
        self.bits = bits
        self.n_on = n_on
        self.r_on = r_on
        # as evaluated when the path was last extended
        self.metric = metric_value

    @property
    def node(self):
        return self.bits[-1]

    @property
    def stats(self):
        return metric.WindowStats(self.n_on, self.r_on)

    def __repr__(self):
        return f"Survivor(bits={self.bits!r}, n_on={self.n_on}, r_on={self.r_on}, metric={self.metric!r})"


def _preferred(a, b):
    # higher metric, then fewer ones, then the lexicographically smaller path
    if a.metric != b.metric:
        return a if a.metric > b.metric else b
    if a.n_on != b.n_on:
        return a if a.n_on < b.n_on else b
    return a if a.bits <= b.bits else b


@dataclass
class TrellisStats:
    steps: int = 0
    emitted: int = 0
    ones_emitted: int = 0
    forced_merges: int = 0
    reanchors: int = 0
    metric_evaluations: int = 0
    depth_total: int = 0
    window_total: int = 0
    depth_histogram: collections.Counter = field(default_factory=collections.Counter)

    @property
    def mean_depth(self):
        return self.depth_total / self.steps if self.steps else 0.0

    @property
    def mean_window(self):
        """Mean effective window L' + d over all steps."""
        return self.window_total / self.steps if self.steps else 0.0

    def combine(self, other):
        """Sum of two tallies, e.g. from independent batches."""
        return TrellisStats(
            steps=self.steps + other.steps,
            emitted=self.emitted + other.emitted,
            ones_emitted=self.ones_emitted + other.ones_emitted,
            forced_merges=self.forced_merges + other.forced_merges,
            reanchors=self.reanchors + other.reanchors,
            metric_evaluations=self.metric_evaluations + other.metric_evaluations,
            depth_total=self.depth_total + other.depth_total,
            window_total=self.window_total + other.window_total,
            depth_histogram=self.depth_histogram + other.depth_histogram)


class TrellisDecoder:
    """
    Streaming trellis receiver. One step per received count.

    A decoder is a sequential state machine: use it from one execution
    context at a time. Emitted decisions are final.

    :param config: TrellisConfig
    :param n_b: mean background count per slot, > 0
    """

    def __init__(self, config, n_b):
        if not n_b > 0:
            raise utils.ParameterDomainError(f"n_b must be positive (got {n_b!r})")
        self.config = config
        self.n_b = n_b
        self.store = SelectiveStore(config.l_m)
        self.stats = TrellisStats()
        self._survivors = None
        self._received = []
        self._reanchor_count = reanchor_count(config.reanchor_tail, n_b)

    @property
    def depth(self):
        return len(self._received)

    @property
    def survivors(self):
        """(node-0 survivor, node-1 survivor), or None before the first step."""
        return self._survivors

    @property
    def received(self):
        return tuple(self._received)

    @property
    def detected_length(self):
        """L': span of decided slots back to the oldest stored 1-decision."""
        oldest = self.store.oldest_position
        return 0 if oldest is None else self.stats.emitted - oldest

    @property
    def window_length(self):
        return self.detected_length + self.depth

    def step(self, count):
        """
        Consume one count; return the bits decided by this step (maybe none).
        """
        count = int(count)
        n_b = self.n_b
        store_n = len(self.store)
        store_r = self.store.total
        self._received.append(count)

        if self._survivors is None:
            zero = Survivor([0], 0, 0, metric._log_metric(store_n, store_r, n_b))
            one = Survivor([1], 1, count, metric._log_metric(store_n + 1, store_r + count, n_b))
            evaluations = 2
        else:
            previous = self._survivors
            zero = _preferred(*(Survivor(p.bits + [0], p.n_on, p.r_on,
                                         metric._log_metric(store_n + p.n_on, store_r + p.r_on, n_b))
                                for p in previous))
            one = _preferred(*(Survivor(p.bits + [1], p.n_on + 1, p.r_on + count,
                                        metric._log_metric(store_n + p.n_on + 1, store_r + p.r_on + count, n_b))
                               for p in previous))
            evaluations = 4
        self._survivors = (zero, one)

        emitted = self._emit_common_prefix()
        if self.depth >= self.config.max_depth:
            emitted += self._force_merge()

        tally = self.stats
        tally.steps += 1
        tally.metric_evaluations += evaluations
        tally.depth_total += self.depth
        tally.depth_histogram[self.depth] += 1
        tally.window_total += self.window_length
        return emitted

    def flush(self):
        """
        Emit the better survivor's ongoing bits and return to a post-merge state.

        The store and the statistics are kept.
        """
        if self._survivors is None:
            return []
        store_n = len(self.store)
        store_r = self.store.total
        for survivor in self._survivors:
            survivor.metric = metric._log_metric(store_n + survivor.n_on, store_r + survivor.r_on, self.n_b)
        winner = _preferred(*self._survivors)
        return self._emit_all(winner.bits)

    def decode(self, counts):
        """Run the decoder over counts and flush; return all decisions in order."""
        decisions = []
        for count in counts:
            decisions.extend(self.step(count))
        decisions.extend(self.flush())
        return decisions

    def _emit(self, bits):
        tally = self.stats
        for bit, count in zip(bits, self._received):
            if bit:
                self.store.push(count, tally.emitted)
                tally.ones_emitted += 1
            elif count >= self._reanchor_count:
                self.store.reset(count, tally.emitted)
                tally.reanchors += 1
                _logger.debug("store re-anchored on count %d at slot %d", count, tally.emitted)
            tally.emitted += 1
        emitted_r = sum(count for bit, count in zip(bits, self._received) if bit)
        del self._received[:len(bits)]
        return list(bits), sum(bits), emitted_r

    def _emit_common_prefix(self):
        zero, one = self._survivors
        prefix = 0
        for a, b in zip(zero.bits, one.bits):
            if a != b:
                break
            prefix += 1
        if not prefix:
            return []
        bits, emitted_n, emitted_r = self._emit(zero.bits[:prefix])
        for survivor in self._survivors:
            survivor.bits = survivor.bits[prefix:]
            survivor.n_on -= emitted_n
            survivor.r_on -= emitted_r
        return bits

    def _emit_all(self, bits):
        emitted = self._emit(bits)[0]
        self._survivors = None
        return emitted

    def _force_merge(self):
        winner = _preferred(*self._survivors)
        self.stats.forced_merges += 1
        _logger.debug("forced merge at d=%d after %d steps", self.depth, self.stats.steps + 1)
        return self._emit_all(winner.bits)
