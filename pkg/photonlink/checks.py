"""
End-to-end self checks behind the ``validate`` command.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from . import channel
from . import detect
from . import metric
from . import simulate


_logger = logging.getLogger(__name__)


FAULTS = ('tie-rule',)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _random_blocks(rng, n_blocks, length):
    """Poisson blocks over mixed signal levels, fading and backgrounds, with n_b = 1 for ties."""
    n_s = rng.choice([0.5, 2.0, 5.0, 10.0, 20.0], size=(n_blocks, 1))
    n_b = rng.choice([1.0, 1.0, 0.5, 2.5], size=(n_blocks, 1))
    gains = channel.lognormal_from_si(0.5).sample(rng, (n_blocks, 1))
    bits = rng.integers(0, 2, (n_blocks, length))
    return rng.poisson(n_s * gains * bits + n_b), n_b[:, 0]


def check_msd_matches_brute_force(rng, n_blocks, lengths=(2, 4, 8, 12), prefer_fewer_ones=True):
    worst = 0.0
    for length in lengths:
        blocks, backgrounds = _random_blocks(rng, n_blocks, length)
        for counts, n_b in zip(blocks, backgrounds):
            oracle = detect.brute_force_detect(counts, n_b)
            fast = detect.msd_detect(counts, n_b, prefer_fewer_ones=prefer_fewer_ones)
            error = abs(fast.log_metric - oracle.log_metric) / max(1.0, abs(oracle.log_metric))
            worst = max(worst, error)
            if error > 1e-9 or fast.n_on != oracle.n_on:
                return CheckResult('msd == brute force', False,
                                   f"L={length} counts={tuple(int(c) for c in counts)} n_b={n_b:g}: "
                                   f"msd {fast.log_metric:.12g} (n_on {fast.n_on}) vs "
                                   f"oracle {oracle.log_metric:.12g} (n_on {oracle.n_on})")
    return CheckResult('msd == brute force', True,
                       f"{n_blocks} blocks per L in {lengths}, worst relative gap {worst:.1e}")


def check_metric_spot_values():
    cases = [
        (metric.log_metric(metric.WindowStats(2, 5), 1.0), 5 * math.log(2.5) - 3),
        (metric.log_metric(metric.WindowStats(1, 0), 0.5), 0.5),
        (metric.log_metric(metric.EMPTY, 3.0), 0.0),
        (detect.brute_force_detect((9, 0, 1), 1.0).log_metric, 9 * math.log(9) - 8),
        (detect.genie_bep_given_h(1.0, channel.ChannelParams(10.0, 1.0)), 0.0093822),
    ]
    for value, expected in cases:
        if not math.isclose(value, expected, rel_tol=1e-5, abs_tol=1e-12):
            return CheckResult('metric spot values', False, f"got {value!r}, expected {expected!r}")
    return CheckResult('metric spot values', True, f"{len(cases)} values")


def check_fading_moments(rng, n_samples):
    # tolerances from the 10^6-sample targets, widened for smaller samples
    scale = math.sqrt(max(1.0, 1e6 / n_samples))
    details = []
    models = [('lognormal', 0.5, channel.lognormal_from_si(0.5)),
              ('gammagamma', 1.38, channel.gammagamma_from_si(1.38))]
    for name, target, model in models:
        if abs(model.scintillation_index - target) > 1e-9:
            return CheckResult('fading moments', False,
                               f"{name}: analytic S.I. {model.scintillation_index!r} != {target}")
        mean, si = channel.sample_moments(model.sample(rng, n_samples))
        if abs(mean - 1.0) > 0.01 * scale or abs(si - target) > 0.03 * target * scale:
            return CheckResult('fading moments', False,
                               f"{name}: mean {mean:.4f}, S.I. {si:.4f} (target {target})")
        details.append(f"{name} mean {mean:.4f} S.I. {si:.4f}")
    return CheckResult('fading moments', True, "; ".join(details))


def check_genie_monte_carlo(seed, n_bits):
    params = channel.ChannelParams(10.0, 1.0)
    expected = simulate.genie_bep_semi_analytic(channel.Constant(1.0), params)
    point = simulate.run_ber_point(simulate.ReceiverSpec('genie'),
                                   simulate.ChannelSpec(channel.Constant(1.0), params),
                                   simulate.StoppingRule(min_errors=0, max_bits=n_bits),
                                   seed=seed)
    sigma = math.sqrt(expected * (1 - expected) / point.bits)
    passed = abs(point.ber - expected) <= 3 * sigma
    return CheckResult('genie MC == semi-analytic', passed,
                       f"BER {point.ber:.5e} over {point.bits} bits vs {expected:.5e} (3 sigma {3 * sigma:.1e})")


def run_checks(quick=False, fault=None, seed=2024):
    """
    Run every check; return the list of CheckResult in a fixed order.

    :param quick: smaller sample sizes, same checks
    :param fault: None, or 'tie-rule' to flip the block detectors' n_on tie rule
    """
    rng = np.random.default_rng(seed)
    n_blocks = 300 if quick else 10000
    n_samples = 200000 if quick else 1000000
    n_bits = 200000 if quick else 1000000
    results = [
        check_msd_matches_brute_force(rng, n_blocks, prefer_fewer_ones=fault != 'tie-rule'),
        check_metric_spot_values(),
        check_fading_moments(rng, n_samples),
        check_genie_monte_carlo(seed, n_bits),
    ]
    for result in results:
        _logger.info("%s: %s (%s)", result.name, "pass" if result.passed else "FAIL", result.detail)
    return results
