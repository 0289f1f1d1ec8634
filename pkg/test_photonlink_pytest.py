import io
import json

import pytest

from photonlink import channel, cli, config, simulate, trellis, utils


SWEEP_CONFIG = """\
# three-point log-normal sweep
model = lognormal
si = 0.5
n_b = 1
l_c = 100
n_s = 2, 5, 10
receivers = genie
min_errors = 0
max_bits = 3000
batch_bits = 1000
seed = 7
"""


def test_genie_without_signal_warning(caplog):
    """Check that a genie receiver at n_s = 0 logs a warning"""

    params = channel.ChannelParams(0.0, 1.0, l_c=100)
    point = simulate.run_ber_point(simulate.ReceiverSpec('genie'),
                                   simulate.ChannelSpec(channel.Constant(1.0), params),
                                   simulate.StoppingRule(0, 1000), batch_bits=500)

    warnings = [r for r in caplog.records if r.levelname == "WARNING"]
    assert 1 == len(warnings)
    assert warnings[0].name == "photonlink.simulate"
    assert "n_s = 0" in warnings[0].message
    assert point.bits == 1000


def test_wide_window_warning(caplog):
    """Check that a trellis window that is not small against l_c logs a warning"""

    params = channel.ChannelParams(5.0, 1.0, l_c=1)
    simulate.run_ber_point(simulate.ReceiverSpec('trellis', 4),
                           simulate.ChannelSpec(channel.lognormal_from_si(0.5), params),
                           simulate.StoppingRule(0, 2000), batch_bits=1000)

    messages = [r.message for r in caplog.records if r.levelname == "WARNING"]
    assert any("mean window" in m for m in messages)


def test_trellis_window_small_against_coherence(caplog):
    """Check that L' + d stays well inside l_c at a long coherence length"""

    params = channel.ChannelParams(20.0, 1.0, l_c=10000)
    point = simulate.run_ber_point(simulate.ReceiverSpec('trellis', 16),
                                   simulate.ChannelSpec(channel.lognormal_from_si(0.5), params),
                                   simulate.StoppingRule(0, 20000), batch_bits=20000)

    assert point.mean_window < params.l_c / 10
    assert point.reanchors is not None
    assert not any("mean window" in r.message for r in caplog.records)


def test_parse_config_lognormal():
    run_config = config.parse_config("model = lognormal\nsi = 0.5\nn_s = 5, 10\n")
    assert run_config.sweep.model == channel.lognormal_from_si(0.5)
    assert run_config.sweep.grid == (5.0, 10.0)
    assert run_config.sweep.receivers == (simulate.ReceiverSpec('genie'),)
    assert run_config.sweep.stopping == simulate.StoppingRule(100, 10 ** 8)
    assert run_config.log == 'ber.csv.log.jsonl'


def test_parse_config_range_error_names_key():
    with pytest.raises(utils.ConfigurationError) as excinfo:
        config.parse_config("n_s = 1\nsi = -1\n")
    assert excinfo.value.key == 'si'
    assert excinfo.value.line == 2
    assert str(excinfo.value).startswith("si (line 2):")


def test_parse_config_override_wins():
    run_config = config.parse_config("lm = 4\nn_s = 1\nreceivers = trellis, trellis(2)\n", {'lm': '8'})
    assert run_config.lm == 8
    assert [r.id for r in run_config.sweep.receivers] == ['trellis(8)', 'trellis(2)']


@pytest.mark.parametrize('text,key', [
    ("n_s = 1\ncolour = red\n", 'colour'),
    ("n_s = 1\nseed = 1\nseed = 2\n", 'seed'),
    ("n_s = 1\nseed = one\n", 'seed'),
    ("n_s = 1\nsnr_db = 10\n", 'snr_db'),
    ("si = 0.5\n", 'n_s'),
    ("n_s = 1\nmodel = gammagamma\nalpha = 2\n", 'alpha'),
    ("n_s = 1\nmodel = gammagamma\nsi = 1.38\nwave = plane\n", 'si'),
    ("n_s = 1\nreceivers = genie, msd(0)\n", 'receivers'),
    ("n_s = 1\nmin_errors = 0\nmax_bits = 0\n", 'min_errors'),
    ("n_s = 1\nn_b = 0\n", 'n_b'),
    ("n_s = 1\njust a line\n", 'just a line'),
    ("n_s = 1\nreanchor_tail = 1\n", 'reanchor_tail'),
])
def test_parse_config_errors(text, key):
    with pytest.raises(utils.ConfigurationError) as excinfo:
        config.parse_config(text)
    assert excinfo.value.key == key


def test_parse_config_snr_grid():
    run_config = config.parse_config("n_b = 2\nsnr_db = 0, 10\n")
    assert run_config.sweep.grid == pytest.approx((2.0, 20.0))


def test_parse_config_without_grid():
    run_config = config.parse_config("model = gammagamma\nsi = 1.38\n", require_grid=False)
    assert abs(run_config.sweep.model.scintillation_index - 1.38) < 1e-9


def test_parse_receivers():
    receivers = config.parse_receivers("genie, msd(2), trellis, fixed(5.5), brute(4)", lm=3, max_depth=12)
    assert [r.id for r in receivers] == ['genie', 'msd(2)', 'trellis(3)', 'fixed(5.5)', 'brute(4)']
    assert receivers[2].max_depth == 12
    assert receivers[2].reanchor_tail == 1e-4
    assert receivers[2].trellis_config == trellis.TrellisConfig(3, 12, 1e-4)
    tuned = config.parse_config("n_s = 1\nreceivers = trellis(2)\nreanchor_tail = 0\n")
    assert tuned.sweep.receivers[0].trellis_config.reanchor_tail == 0.0
    with pytest.raises(ValueError):
        config.parse_receivers("msd(2")


def test_csv_round_trip():
    points = [
        simulate.BerPoint('trellis(8)', 10.0, 10.0, 1.0, 10.0, bits=70000, errors=123,
                          mean_d=1.25, forced_merges=0),
        simulate.BerPoint('genie', 2.0, 2.0, 1.0, 3.0103, bits=70000, errors=5000),
    ]
    stream = io.StringIO()
    config.write_csv(points, stream)
    lines = stream.getvalue().splitlines()
    assert lines[0] == ','.join(config.CSV_HEADER)
    assert lines[2].startswith('genie,2,2,1,3.0103,70000,5000,7.14286e-02,1.9')
    assert lines[2].endswith(',,')

    rows = config.read_csv(io.StringIO(stream.getvalue()))
    assert rows[0]['receiver'] == 'trellis(8)'
    assert rows[0]['errors'] == 123
    assert rows[0]['ber'] == pytest.approx(points[0].ber, rel=1e-5)
    assert rows[0]['mean_d'] == 1.25
    assert rows[1]['mean_d'] is None
    assert rows[1]['forced_merges'] is None


def test_read_csv_rejects_foreign_header():
    with pytest.raises(utils.ConfigurationError):
        config.read_csv(io.StringIO("a,b\n1,2\n"))


def test_sweep_writes_csv_and_log(tmp_path):
    cfg = tmp_path / 'run.cfg'
    cfg.write_text(SWEEP_CONFIG)
    out = tmp_path / 'ber.csv'

    assert cli.main(['sweep', '--config', str(cfg), '--out', str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ','.join(config.CSV_HEADER)
    assert len(lines) == 4
    assert all(line.startswith('genie,') for line in lines[1:])

    records = [json.loads(line) for line in (tmp_path / 'ber.csv.log.jsonl').read_text().splitlines()]
    assert len(records) == 3
    assert records[0]['seed'] == 7
    assert records[0]['bits'] == 3000


def test_sweep_is_reproducible(tmp_path):
    cfg = tmp_path / 'run.cfg'
    cfg.write_text(SWEEP_CONFIG.replace("receivers = genie\n", "receivers = genie, msd(2), trellis(1)\n"))
    first = tmp_path / 'first.csv'
    second = tmp_path / 'second.csv'
    assert cli.main(['sweep', '--config', str(cfg), '--out', str(first)]) == 0
    assert cli.main(['sweep', '--config', str(cfg), '--out', str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_sweep_unwritable_output(tmp_path, capsys):
    cfg = tmp_path / 'run.cfg'
    cfg.write_text(SWEEP_CONFIG)
    out = tmp_path / 'missing' / 'ber.csv'
    assert cli.main(['sweep', '--config', str(cfg), '--out', str(out)]) == 1
    assert 'cannot write output' in capsys.readouterr().err


def test_sweep_unwritable_log_closes_csv(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / 'run.cfg'
    cfg.write_text(SWEEP_CONFIG + "log = " + str(tmp_path / 'missing' / 'run.jsonl') + "\n")
    opened = []

    def tracking_open(*args, **kwargs):
        handle = open(*args, **kwargs)
        opened.append(handle)
        return handle

    monkeypatch.setattr(cli, 'open', tracking_open, raising=False)
    assert cli.main(['sweep', '--config', str(cfg), '--out', str(tmp_path / 'ber.csv')]) == 1
    assert 'cannot write output' in capsys.readouterr().err
    assert len(opened) == 2
    assert all(handle.closed for handle in opened)


def test_sweep_configuration_error(tmp_path, capsys):
    cfg = tmp_path / 'run.cfg'
    cfg.write_text(SWEEP_CONFIG)
    assert cli.main(['sweep', '--config', str(cfg), '--si', '-1']) == 2
    assert 'si (line 0)' in capsys.readouterr().err


def test_missing_config_file(tmp_path):
    assert cli.main(['sweep', '--config', str(tmp_path / 'nope.cfg')]) == 2


def test_set_override(tmp_path):
    cfg = tmp_path / 'run.cfg'
    cfg.write_text(SWEEP_CONFIG)
    out = tmp_path / 'ber.csv'
    assert cli.main(['sweep', '--config', str(cfg), '--out', str(out), '--set', 'max_bits=1000']) == 0
    rows = config.read_csv(io.StringIO(out.read_text()))
    assert [row['bits'] for row in rows] == [1000, 1000, 1000]


def test_genie_bound_command(tmp_path):
    cfg = tmp_path / 'run.cfg'
    cfg.write_text("model = constant\nn_b = 1\nn_s = 10\n")
    out = tmp_path / 'bound.csv'
    assert cli.main(['genie-bound', '--config', str(cfg), '--out', str(out)]) == 0
    rows = config.read_csv(io.StringIO(out.read_text()))
    assert rows[0]['receiver'] == 'genie-bound'
    assert rows[0]['ber'] == pytest.approx(0.0093822, rel=1e-4)


def test_fading_stats_command(tmp_path, capsys):
    cfg = tmp_path / 'run.cfg'
    cfg.write_text("model = lognormal\nsi = 0.5\n")
    assert cli.main(['fading-stats', '--config', str(cfg), '--quick']) == 0
    lines = capsys.readouterr().out.splitlines()
    si_line = next(line for line in lines if line.startswith('S.I.'))
    assert abs(float(si_line.split()[1]) - 0.5) < 0.05


def test_validate_quick():
    assert cli.main(['validate', '--quick']) == 0


def test_validate_detects_tie_rule_fault(capsys):
    assert cli.main(['validate', '--quick', '--inject-fault', 'tie-rule']) != 0
    assert 'msd == brute force' in capsys.readouterr().err
