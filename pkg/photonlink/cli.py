#!/usr/bin/env python
"""
Command-line surface.

    photonlink sweep --config run.cfg [--out ber.csv] [--seed N] [--shards N]
    photonlink validate [--quick]
    photonlink genie-bound --config run.cfg [--out bound.csv]
    photonlink fading-stats --config run.cfg [--quick]

Exit codes: 0 ok, 1 runtime error, 2 configuration error.
"""
import argparse
import contextlib
import csv
import datetime
import json
import logging
import sys

import numpy as np

from . import __version__
from . import channel
from . import checks
from . import config
from . import simulate
from . import utils


_logger = logging.getLogger(__name__)


EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

# flag destination -> config key
_OVERRIDES = {
    'seed': 'seed',
    'shards': 'shards',
    'out': 'out',
    'lm': 'lm',
    'l': 'l',
    'si': 'si',
    'max_bits': 'max_bits',
    'min_errors': 'min_errors',
}


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help="key = value configuration file")
    common.add_argument('--out', help="CSV output path")
    common.add_argument('--seed', help="master seed")
    common.add_argument('--shards', help="worker processes")
    common.add_argument('--lm', help="selective-store length for bare 'trellis' receivers")
    common.add_argument('--l', help="trellis ongoing-buffer length")
    common.add_argument('--si', help="scintillation index")
    common.add_argument('--max-bits', dest='max_bits', help="bit cap per point")
    common.add_argument('--min-errors', dest='min_errors', help="error target per point")
    common.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                        help="override any configuration key")
    common.add_argument('--quick', action='store_true', help="reduced sample sizes")
    common.add_argument('-v', '--verbose', action='count', default=0)

    parser = argparse.ArgumentParser(prog='photonlink', description="Photon-counting FSO link simulator")
    parser.add_argument('--version', action='version', version=__version__)
    commands = parser.add_subparsers(dest='command', required=True)
    commands.add_parser('sweep', parents=[common], help="Monte Carlo BER sweep to CSV")
    validate = commands.add_parser('validate', parents=[common], help="run the embedded checks")
    validate.add_argument('--inject-fault', choices=checks.FAULTS, help=argparse.SUPPRESS)
    commands.add_parser('genie-bound', parents=[common], help="semi-analytic genie bound to CSV")
    commands.add_parser('fading-stats', parents=[common], help="sample moments of the fading model")
    return parser


def _overrides(args):
    overrides = {key: getattr(args, dest) for dest, key in _OVERRIDES.items()
                 if getattr(args, dest) is not None}
    for item in args.set:
        key, sep, value = item.partition('=')
        if not sep:
            raise utils.ConfigurationError(f"expected KEY=VALUE, got {item!r}", key='--set', line=0)
        overrides[key.strip()] = value.strip()
    return overrides


def load_config(args, require_grid=True):
    text = ''
    if args.config:
        try:
            with open(args.config, encoding='utf-8') as f:
                text = f.read()
        except OSError as e:
            raise utils.ConfigurationError(f"cannot read config: {e}", key='--config') from None
    return config.parse_config(text, _overrides(args), require_grid=require_grid)


def _run_log_record(run_config, point):
    sweep = run_config.sweep
    return {
        'time': datetime.datetime.now(datetime.timezone.utc).isoformat(),
        'receiver': point.receiver,
        'param': point.param,
        'snr_db': point.snr_db,
        'seed': sweep.seed,
        'shards': sweep.shards,
        'batches': point.batches,
        'bits': point.bits,
        'errors': point.errors,
        'ber': point.ber,
        'mean_d': point.mean_d,
        'forced_merges': point.forced_merges,
        'mean_window': point.mean_window,
        'reanchors': point.reanchors,
        'depth_histogram': {str(k): v for k, v in point.depth_histogram.items()},
    }


def command_sweep(run_config):
    """Run the configured sweep; write the CSV and the run log."""
    with contextlib.ExitStack() as files:
        try:
            out = files.enter_context(open(run_config.out, 'w', encoding='utf-8', newline=''))
            log = files.enter_context(open(run_config.log, 'w', encoding='utf-8'))
        except OSError as e:
            print(f"photonlink: cannot write output: {e}", file=sys.stderr)
            return EXIT_RUNTIME

        def record(point):
            log.write(json.dumps(_run_log_record(run_config, point), sort_keys=True) + '\n')
            log.flush()

        points = simulate.run_sweep(run_config.sweep, callback=record)
        config.write_csv(points, out)

    for receiver in run_config.sweep.receivers:
        curve = [p for p in points if p.receiver == receiver.id]
        crossing = simulate.crossing_snr([p.snr_db for p in curve], [p.ber for p in curve], 1e-3)
        if crossing is not None:
            _logger.info("%s crosses BER 1e-3 at %.2f dB", receiver.id, crossing)
    print(f"wrote {len(points)} rows to {run_config.out}")
    return EXIT_OK


def command_genie_bound(run_config):
    sweep = run_config.sweep
    beps = simulate.genie_bound_curve(sweep.model, sweep.base, sweep.grid,
                                      n_gain_samples=run_config.gain_samples, seed=sweep.seed)
    try:
        with open(run_config.out, 'w', encoding='utf-8', newline='') as out:
            writer = csv.writer(out, lineterminator='\n')
            writer.writerow(config.CSV_HEADER)
            for n_s, bep in zip(sweep.grid, beps):
                snr = sweep.snr_mapping(n_s, sweep.base.n_b)
                writer.writerow(config.format_bound_row(n_s, sweep.base.n_b, snr, bep))
    except OSError as e:
        print(f"photonlink: cannot write output: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {len(beps)} rows to {run_config.out}")
    return EXIT_OK


def command_fading_stats(run_config, quick=False):
    model = run_config.sweep.model
    n_samples = 100000 if quick else 1000000
    gains = model.sample(np.random.default_rng(run_config.sweep.seed), n_samples)
    mean, si = channel.sample_moments(gains)
    print(f"model            {model!r}")
    print(f"samples          {n_samples}")
    print(f"mean             {mean:.6f}  (target 1)")
    print(f"S.I.             {si:.6f}  (target {model.scintillation_index:.6f})")
    return EXIT_OK


def command_validate(quick=False, fault=None):
    """Run the embedded checks; 0 iff every check passes."""
    results = checks.run_checks(quick=quick, fault=fault)
    width = max(len(r.name) for r in results)
    for result in results:
        print(f"{result.name:<{width}}  {'PASS' if result.passed else 'FAIL'}  {result.detail}")
    failed = [r for r in results if not r.passed]
    if failed:
        print(f"photonlink: check failed: {failed[0].name}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    level = (logging.WARNING, logging.INFO, logging.DEBUG)[min(args.verbose, 2)]
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        if args.command == 'validate':
            return command_validate(quick=args.quick, fault=args.inject_fault)
        run_config = load_config(args, require_grid=args.command != 'fading-stats')
        if args.command == 'sweep':
            return command_sweep(run_config)
        if args.command == 'genie-bound':
            return command_genie_bound(run_config)
        return command_fading_stats(run_config, quick=args.quick)
    except utils.ConfigurationError as e:
        print(f"photonlink: configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (utils.PhotonLinkError, OSError) as e:
        print(f"photonlink: {e}", file=sys.stderr)
        return EXIT_RUNTIME
