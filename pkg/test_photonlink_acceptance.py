"""
Multi-minute Monte Carlo sweeps. Run with ``pytest -m slow`` (or ``tox -e acceptance``).
"""
import math

import numpy as np
import pytest

from photonlink import channel, checks, config, detect, simulate


pytestmark = pytest.mark.slow

SHARDS = 4
GRID_DB = tuple(range(8, 23))
RECEIVERS = ('genie', 'msd(2)', 'msd(4)', 'trellis(1)', 'trellis(4)', 'trellis(8)')

GAMMAGAMMA_GRID_DB = tuple(range(12, 35, 2))
GAMMAGAMMA_RECEIVERS = ('msd(2)', 'msd(4)', 'msd(8)', 'trellis(1)', 'trellis(8)')


def _sweep(model, grid_db, receiver_ids, min_errors, max_bits, seed):
    base = channel.ChannelParams(0.0, 1.0, l_c=1000)
    sweep = simulate.SweepConfig(model=model, base=base,
                                 grid=tuple(base.n_b * 10 ** (db / 10) for db in grid_db),
                                 receivers=config.parse_receivers(', '.join(receiver_ids)),
                                 stopping=simulate.StoppingRule(min_errors=min_errors, max_bits=max_bits),
                                 seed=seed, shards=SHARDS)
    points = simulate.run_sweep(sweep)
    curves = {receiver: [p for p in points if p.receiver == receiver] for receiver in receiver_ids}
    bound = simulate.genie_bound_curve(sweep.model, base, sweep.grid, n_gain_samples=10 ** 6)
    return sweep, curves, bound


@pytest.fixture(scope='module')
def lognormal_sweep():
    """Every receiver over a 1 dB grid under log-normal fading, S.I. = 0.5."""
    return _sweep(channel.lognormal_from_si(0.5), GRID_DB, RECEIVERS,
                  min_errors=1000, max_bits=4 * 10 ** 6, seed=20)


@pytest.fixture(scope='module')
def gammagamma_sweep():
    """MSD against the trellis receiver under Gamma-Gamma fading, S.I. = 1.38."""
    return _sweep(channel.gammagamma_from_si(1.38), GAMMAGAMMA_GRID_DB, GAMMAGAMMA_RECEIVERS,
                  min_errors=500, max_bits=2 * 10 ** 6, seed=21)


def _crossing(curve, target=1e-3):
    crossing = simulate.crossing_snr([p.snr_db for p in curve], [p.ber for p in curve], target)
    assert crossing is not None, f"{curve[0].receiver} never crosses BER {target:g}"
    return crossing


def _bound_crossing(sweep, bound, target=1e-3):
    snr = [simulate.snr_db(n_s, sweep.base.n_b) for n_s in sweep.grid]
    crossing = simulate.crossing_snr(snr, bound, target)
    assert crossing is not None, f"genie bound never crosses BER {target:g}"
    return crossing


def _in_band(point, low=1e-4, high=1e-2):
    return low <= point.ber <= high


def test_msd_matches_brute_force():
    result = checks.check_msd_matches_brute_force(np.random.default_rng(1), 10 ** 4)
    assert result.passed, result.detail


def test_genie_constant_channel():
    result = checks.check_genie_monte_carlo(seed=3, n_bits=10 ** 6)
    assert result.passed, result.detail


@pytest.mark.parametrize('n_s', [10.0, 20.0])
def test_genie_lognormal(n_s):
    # l_c = 1 makes every slot an independent fade, so the binomial spread applies
    model = channel.lognormal_from_si(0.5)
    params = channel.ChannelParams(n_s, 1.0, l_c=1)
    beps = detect.genie_bep_given_h(model.sample(np.random.default_rng(5), 10 ** 6), params)
    expected = float(np.mean(beps))
    point = simulate.run_ber_point(simulate.ReceiverSpec('genie'), simulate.ChannelSpec(model, params),
                                   simulate.StoppingRule(0, 10 ** 6), seed=6, shards=SHARDS)
    sigma = math.sqrt(expected * (1 - expected) / point.bits + np.var(beps) / beps.size)
    assert abs(point.ber - expected) <= 3 * sigma


def test_fading_samplers():
    result = checks.check_fading_moments(np.random.default_rng(8), 10 ** 6)
    assert result.passed, result.detail


def test_shard_count_does_not_change_counts():
    channel_spec = simulate.ChannelSpec(channel.lognormal_from_si(0.5), channel.ChannelParams(12.0, 1.0))
    for receiver in (simulate.ReceiverSpec('msd', 2), simulate.ReceiverSpec('trellis', 4)):
        stopping = simulate.StoppingRule(200, 10 ** 6)
        one = simulate.run_ber_point(receiver, channel_spec, stopping, seed=9, shards=1)
        eight = simulate.run_ber_point(receiver, channel_spec, stopping, seed=9, shards=8)
        assert (one.bits, one.errors) == (eight.bits, eight.errors)


def test_trellis_reaches_genie_bound(lognormal_sweep):
    sweep, curves, bound = lognormal_sweep
    bound_crossing = _bound_crossing(sweep, bound)
    assert abs(_crossing(curves['trellis(8)']) - bound_crossing) <= 0.3
    assert abs(_crossing(curves['trellis(1)']) - bound_crossing) <= 1.0


def test_genie_curve_nonincreasing(lognormal_sweep):
    _, curves, _ = lognormal_sweep
    genie = curves['genie']
    for low, high in zip(genie, genie[1:]):
        assert high.ber <= low.ber + low.ci95 + high.ci95


def test_trellis_outperforms_msd(lognormal_sweep):
    _, curves, _ = lognormal_sweep
    compared = 0
    for trellis, msd in zip(curves['trellis(1)'], curves['msd(2)']):
        if _in_band(msd):
            compared += 1
            assert trellis.ber <= msd.ber + max(msd.ci95, trellis.ci95)
    assert compared


def test_merge_depth(lognormal_sweep):
    _, curves, _ = lognormal_sweep
    for receiver in ('trellis(1)', 'trellis(4)', 'trellis(8)'):
        for point in curves[receiver]:
            if point.ber <= 1e-2:
                assert point.mean_d <= 3
            assert point.forced_merges / point.bits < 1e-4


def test_error_floor(lognormal_sweep):
    _, curves, _ = lognormal_sweep
    top = [i for i, db in enumerate(GRID_DB) if db >= GRID_DB[-1] - 6]
    msd = curves['msd(4)']
    assert msd[top[0]].ber < 2 * msd[top[-1]].ber

    trellis = curves['trellis(4)']
    assert trellis[top[-1]].ber * 5 < trellis[top[0]].ber
    for low, high in zip(trellis, trellis[1:]):
        assert high.ber <= low.ber + low.ci95 + high.ci95


def test_gammagamma_trellis_reaches_genie_bound(gammagamma_sweep):
    sweep, curves, bound = gammagamma_sweep
    bound_crossing = _bound_crossing(sweep, bound)
    assert abs(_crossing(curves['trellis(8)']) - bound_crossing) <= 0.5
    assert abs(_crossing(curves['trellis(1)']) - bound_crossing) <= 1.5


def test_gammagamma_trellis_outperforms_every_msd(gammagamma_sweep):
    _, curves, _ = gammagamma_sweep
    for receiver in ('msd(2)', 'msd(4)', 'msd(8)'):
        compared = 0
        for trellis, msd in zip(curves['trellis(8)'], curves[receiver]):
            if _in_band(msd):
                compared += 1
                assert trellis.ber <= msd.ber + max(msd.ci95, trellis.ci95)
        assert compared, receiver
    for trellis, msd in zip(curves['trellis(1)'], curves['msd(2)']):
        if _in_band(msd):
            assert trellis.ber <= msd.ber + max(msd.ci95, trellis.ci95)


def test_gammagamma_trellis_has_no_error_floor(gammagamma_sweep):
    _, curves, _ = gammagamma_sweep
    top = [i for i, db in enumerate(GAMMAGAMMA_GRID_DB) if db >= GAMMAGAMMA_GRID_DB[-1] - 6]
    trellis = curves['trellis(8)']
    assert trellis[top[-1]].ber * 5 < trellis[top[0]].ber
    for low, high in zip(trellis, trellis[1:]):
        assert high.ber <= low.ber + low.ci95 + high.ci95
