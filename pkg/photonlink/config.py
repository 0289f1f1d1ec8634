"""
Run configuration and result files.

Config grammar: one ``key = value`` per line, ``#`` starts a comment, keys
are case-sensitive, unknown and duplicate keys are errors. Command-line
overrides win over file values.
"""
import csv
import math
import re
from dataclasses import dataclass, field

from . import channel
from . import simulate
from . import utils


CSV_HEADER = ('receiver', 'param', 'n_s', 'n_b', 'snr_db', 'bits', 'errors',
              'ber', 'ci95', 'mean_d', 'forced_merges')

MODELS = ('constant', 'lognormal', 'gammagamma')

DEFAULTS = {
    'model': 'lognormal',
    'si': 0.5,
    'wave': 'spherical',
    'n_b': 1.0,
    'l_c': 10000,
    'receivers': 'genie',
    'lm': 1,
    'l': 20,
    'reanchor_tail': 1e-4,
    'min_errors': 100,
    'max_bits': 10 ** 8,
    'batch_bits': simulate.DEFAULT_BATCH_BITS,
    'seed': 1,
    'shards': 1,
    'gain_samples': 200000,
    'out': 'ber.csv',
}

_RECEIVER = re.compile(r"^(?P<kind>[a-z]+)(?:\((?P<param>[^()]*)\))?$")


@dataclass(frozen=True)
class RunConfig:
    sweep: simulate.SweepConfig
    out: str
    log: str
    lm: int
    gain_samples: int
    settings: dict = field(default_factory=dict)


##############
# Converters #
##############

def _number(kind, minimum=None, strict=False):
    def convert(text):
        try:
            value = kind(text)
        except ValueError:
            raise ValueError(f"expected {'an integer' if kind is int else 'a number'}, got {text!r}")
        if kind is float and not math.isfinite(value):
            raise ValueError(f"expected a finite number, got {text!r}")
        if minimum is not None:
            if strict and not value > minimum:
                raise ValueError(f"must be > {minimum:g} (got {text})")
            if not strict and not value >= minimum:
                raise ValueError(f"must be >= {minimum:g} (got {text})")
        return value
    return convert


def _number_list(item):
    def convert(text):
        values = tuple(item(part.strip()) for part in text.split(',') if part.strip())
        if not values:
            raise ValueError("expected a comma-separated list of numbers")
        return values
    return convert


def _choice(options):
    def convert(text):
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text
    return convert


def _text(text):
    if not text:
        raise ValueError("expected a value")
    return text


def _tail(text):
    value = _number(float, 0)(text)
    if not value < 1:
        raise ValueError(f"must be < 1 (got {text})")
    return value


_KEYS = {
    'model': _choice(MODELS),
    'si': _number(float, 0, strict=True),
    'h': _number(float, 0, strict=True),
    'alpha': _number(float, 0, strict=True),
    'beta': _number(float, 0, strict=True),
    'wave': _choice(channel.WAVES),
    'n_b': _number(float, 0, strict=True),
    'n_s': _number_list(_number(float, 0)),
    'snr_db': _number_list(_number(float)),
    'l_c': _number(int, 1),
    'receivers': _text,
    'lm': _number(int, 1),
    'l': _number(int, 2),
    'reanchor_tail': _tail,
    'min_errors': _number(int, 0),
    'max_bits': _number(int, 0),
    'batch_bits': _number(int, 1),
    'seed': _number(int, 0),
    'shards': _number(int, 1),
    'gain_samples': _number(int, 1),
    'out': _text,
    'log': _text,
}


def _convert(key, text, line):
    if key not in _KEYS:
        raise utils.ConfigurationError("unknown key", key=key, line=line)
    try:
        return _KEYS[key](text)
    except ValueError as e:
        raise utils.ConfigurationError(str(e), key=key, line=line) from None


###########
# Parsing #
###########

def parse_receivers(text, lm=1, max_depth=20, reanchor_tail=1e-4):
    """Parse 'genie, msd(2), trellis(8), trellis, fixed(5.5), brute(4)'."""
    receivers = []
    for item in text.split(','):
        item = item.strip()
        match = _RECEIVER.match(item)
        if match is None:
            raise ValueError(f"cannot parse receiver {item!r}")
        kind, param = match.group('kind'), match.group('param')
        if param is None:
            value = lm if kind == 'trellis' else None
        elif kind == 'fixed':
            value = _number(float, 0, strict=True)(param)
        else:
            value = _number(int, 1)(param)
        try:
            receivers.append(simulate.ReceiverSpec(kind, value, max_depth=max_depth,
                                                   reanchor_tail=reanchor_tail))
        except utils.PhotonLinkError as e:
            raise ValueError(str(e)) from None
    return tuple(receivers)


def parse_config(text, overrides=None, require_grid=True):
    """
    Parse and validate a run configuration.

    :param text: config file contents
    :param overrides: optional {key: str} from the command line, applied last
    :param require_grid: False for commands that need no sweep grid
    :return: RunConfig
    :raises ConfigurationError: naming the offending key and line (0 for overrides)
    """
    settings = {}
    lines = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise utils.ConfigurationError("expected 'key = value'", key=line, line=number)
        key, value = (part.strip() for part in line.split('=', 1))
        if key in settings:
            raise utils.ConfigurationError(f"duplicate key, first set on line {lines[key]}", key=key, line=number)
        settings[key] = _convert(key, value, number)
        lines[key] = number

    for key, value in (overrides or {}).items():
        settings[key] = _convert(key, str(value), 0)
        lines[key] = 0

    merged = dict(DEFAULTS, **settings)

    def fail(message, key):
        raise utils.ConfigurationError(message, key=key, line=lines.get(key))

    if 'n_s' in merged and 'snr_db' in merged:
        fail("give only one of n_s or snr_db", 'snr_db')
    if not require_grid and 'n_s' not in merged and 'snr_db' not in merged:
        merged['n_s'] = (0.0,)
    if 'n_s' not in merged and 'snr_db' not in merged:
        fail("a sweep grid is required: set n_s or snr_db", 'n_s')
    if ('alpha' in merged) != ('beta' in merged):
        fail("alpha and beta must be given together", 'alpha' if 'alpha' in merged else 'beta')

    try:
        model = channel.build_model(merged['model'], si=merged['si'], h=merged.get('h'),
                                    alpha=merged.get('alpha'), beta=merged.get('beta'),
                                    wave=merged['wave'])
    except utils.ParameterDomainError as e:
        fail(str(e), 'si')

    try:
        base = channel.ChannelParams(n_s=0.0, n_b=merged['n_b'], l_c=merged['l_c'])
    except utils.ParameterDomainError as e:
        fail(str(e), 'n_b')

    if 'n_s' in merged:
        grid = merged['n_s']
    else:
        grid = tuple(base.n_b * 10.0 ** (value / 10.0) for value in merged['snr_db'])

    try:
        receivers = parse_receivers(merged['receivers'], lm=merged['lm'], max_depth=merged['l'],
                                    reanchor_tail=merged['reanchor_tail'])
    except ValueError as e:
        fail(str(e), 'receivers')

    try:
        stopping = simulate.StoppingRule(merged['min_errors'], merged['max_bits'])
    except utils.ConfigurationError as e:
        fail(str(e), 'min_errors')

    sweep = simulate.SweepConfig(model=model, base=base, grid=tuple(grid), receivers=receivers,
                                 stopping=stopping, seed=merged['seed'], shards=merged['shards'],
                                 batch_bits=merged['batch_bits'])
    out = merged['out']
    return RunConfig(sweep=sweep, out=out, log=merged.get('log', out + '.log.jsonl'),
                     lm=merged['lm'], gain_samples=merged['gain_samples'], settings=merged)


###############
# Result rows #
###############

def format_row(point):
    """CSV record of a BerPoint: BER and CI with 6 significant digits, blanks where not applicable."""
    return [
        point.receiver,
        f"{point.param:.6g}",
        f"{point.n_s:.6g}",
        f"{point.n_b:.6g}",
        f"{point.snr_db:.6g}",
        str(point.bits),
        str(point.errors),
        f"{point.ber:.5e}",
        f"{point.ci95:.5e}",
        '' if point.mean_d is None else f"{point.mean_d:.6g}",
        '' if point.forced_merges is None else str(point.forced_merges),
    ]


def format_bound_row(n_s, n_b, snr, bep):
    """CSV record of a semi-analytic genie-bound value: no bit or error tallies."""
    return ['genie-bound', f"{n_s:.6g}", f"{n_s:.6g}", f"{n_b:.6g}", f"{snr:.6g}",
            '', '', f"{bep:.5e}", '', '', '']


def write_csv(points, stream):
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(CSV_HEADER)
    for point in points:
        writer.writerow(format_row(point))


def read_csv(stream):
    """Parse rows written by write_csv back into dicts of numbers."""
    reader = csv.DictReader(stream)
    if tuple(reader.fieldnames or ()) != CSV_HEADER:
        raise utils.ConfigurationError(f"unexpected CSV header {reader.fieldnames!r}")
    rows = []
    for record in reader:
        row = {'receiver': record['receiver']}
        for key in ('param', 'n_s', 'n_b', 'snr_db', 'ber', 'ci95', 'mean_d'):
            row[key] = float(record[key]) if record[key] != '' else None
        for key in ('bits', 'errors', 'forced_merges'):
            row[key] = int(record[key]) if record[key] != '' else None
        rows.append(row)
    return rows
