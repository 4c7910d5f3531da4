"""
Scenario configuration.

Scenario files are INI-style text; every key is addressed by its dotted name
``section.key``::

    [chirp]
    n_sig = 750

    [channel]
    amplitudes = 1, -0.8, 0.4
    delays = 200, 204, 220

    [ga]
    population_size = 50

The same dotted names are accepted as ``--set section.key=value`` overrides.
"""
import  configparser
from    dataclasses import dataclass, field
import  hashlib
import  logging
import  math
import  re

import  numpy as np

from    multipathga.decorators import AllowedKeys, parse_values
from    multipathga.error import ConfigError, DomainError
from    multipathga.estimator import MODES, EstimationTask, delay_period, parameter_names
from    multipathga.ga_optimizer import GaConfig
from    multipathga.signal_synth import NOISELESS, ChirpSpec, MultipathChannel, SampledSignal

logger = logging.getLogger(__name__)

ERROR_FUNCTIONS = ('thresholded', 'full', 'raef')
SWEEP_AXES = ('tau', 'lambda')

_SECTION = re.compile(r'^\s*\[([^\]]+)\]')
_KEY = re.compile(r'^\s*([^\s#;=:\[][^=:]*?)\s*[=:]')


@dataclass(frozen=True, eq=False)
class ScenarioConfig():
    chirp: ChirpSpec = field(default_factory=ChirpSpec)
    channel: MultipathChannel = field(default_factory=lambda: MultipathChannel([1.0, -0.8, 0.4], [200, 204, 220]))
    t_s: float = 1.0
    record_len: int = 1000
    snr_db: float = NOISELESS
    threshold_frac: float = 0.1
    mode: str = 'full'
    polish: bool = None
    num_paths: int = None
    delay_bounds: tuple = None
    amplitude_bounds: tuple = (-2.0, 2.0)
    delay_bits: int = 16
    amplitude_bits: int = 12
    ga: GaConfig = field(default_factory=GaConfig)
    trials: int = 50
    snr_list: tuple = (20.0, 10.0, 0.0, -10.0)
    workers: int = 1
    sweep_parameter: str = 'tau1'
    sweep_start: float = None
    sweep_stop: float = None
    sweep_steps: int = 1000
    sweep_error_fn: str = 'thresholded'
    sweep_axis: str = 'tau'
    seed: int = 1
    source: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.num_paths is None:
            object.__setattr__(self, 'num_paths', self.channel.num_paths)
        if self.delay_bounds is None:
            object.__setattr__(self, 'delay_bounds', (0.0, float(delay_period(self.record_len))))
        validate(self)

    @property
    def noiseless(self):
        return self.snr_db == NOISELESS

    @property
    def digest(self):
        """Short hash of the effective settings, written into output headers."""
        return hashlib.sha256(canonical_text(self).encode()).hexdigest()[:16]

    def task(self, received: SampledSignal, pulse: SampledSignal, seed):
        return EstimationTask(received=received,
                              pulse=pulse,
                              num_paths=self.num_paths,
                              threshold_frac=self.threshold_frac,
                              mode=self.mode,
                              ga=_with_seed(self.ga, seed),
                              polish=self.polish,
                              delay_bounds=self.delay_bounds,
                              amplitude_bounds=self.amplitude_bounds,
                              delay_bits=self.delay_bits,
                              amplitude_bits=self.amplitude_bits)


def _with_seed(ga: GaConfig, seed):
    settings = dict(ga.__dict__)
    settings['seed'] = seed
    return GaConfig(**settings)


def canonical_text(config: ScenarioConfig):
    c = config
    lines = [f'chirp = {c.chirp}',
             f'channel.amplitudes = {c.channel.amplitudes.tolist()}',
             f'channel.delays = {c.channel.delays.tolist()}',
             f't_s = {c.t_s!r}', f'record_len = {c.record_len}', f'snr_db = {c.snr_db!r}',
             f'threshold_frac = {c.threshold_frac!r}', f'mode = {c.mode}', f'polish = {c.polish}',
             f'num_paths = {c.num_paths}', f'delay_bounds = {c.delay_bounds}',
             f'amplitude_bounds = {c.amplitude_bounds}', f'bits = {c.delay_bits}/{c.amplitude_bits}',
             f'ga = {c.ga}', f'trials = {c.trials}', f'snr_list = {list(c.snr_list)}',
             f'sweep = {c.sweep_parameter} {c.sweep_start} {c.sweep_stop} {c.sweep_steps} '
             f'{c.sweep_error_fn} {c.sweep_axis}',
             f'seed = {c.seed}']
    return '\n'.join(lines)


def _fail(config, key, message):
    path, line = config.source.get(key, (None, None))
    raise ConfigError(message, path=path, line=line)


def validate(config: ScenarioConfig):
    """Cross-module checks; individual values were validated by their own types."""
    c = config
    if c.t_s <= 0:
        _fail(c, 'channel.t_s', f't_s must be positive, got {c.t_s}')
    if c.record_len < 2:
        _fail(c, 'record.length', f'record length must be at least 2, got {c.record_len}')
    if c.chirp.n_sig > c.record_len:
        _fail(c, 'chirp.n_sig', f'pulse of {c.chirp.n_sig} samples does not fit a record of {c.record_len}')
    if np.any(c.channel.delays >= c.record_len):
        _fail(c, 'channel.delays', f'path delays must lie in [0, {c.record_len})')
    if c.num_paths < 1:
        _fail(c, 'estimate.num_paths', f'num_paths must be at least 1, got {c.num_paths}')
    if not 0 < c.threshold_frac < 1:
        _fail(c, 'estimate.threshold_frac', f'threshold_frac must lie in (0, 1), got {c.threshold_frac}')
    if c.mode not in MODES:
        _fail(c, 'estimate.mode', f'mode must be one of {sorted(set(MODES.values()))}, got {c.mode!r}')
    if not c.delay_bounds[0] < c.delay_bounds[1]:
        _fail(c, 'estimate.delay_max', f'empty delay range {c.delay_bounds}')
    if not c.amplitude_bounds[0] < c.amplitude_bounds[1]:
        _fail(c, 'estimate.amplitude_max', f'empty amplitude range {c.amplitude_bounds}')
    if c.delay_bits < 1 or c.amplitude_bits < 1:
        _fail(c, 'estimate.delay_bits', 'genes need at least one bit')
    if c.trials < 1:
        _fail(c, 'bench.trials', f'trials must be at least 1, got {c.trials}')
    if not c.snr_list:
        _fail(c, 'bench.snr_list', 'snr_list must not be empty')
    if any(math.isnan(v) or v == -math.inf for v in c.snr_list):
        _fail(c, 'bench.snr_list', 'snr_list entries must be finite or noiseless')
    if c.workers < 1:
        _fail(c, 'bench.workers', f'workers must be at least 1, got {c.workers}')
    if c.sweep_parameter not in parameter_names(c.channel.num_paths):
        _fail(c, 'sweep.parameter', f'unknown sweep parameter {c.sweep_parameter!r} for a '
                                    f'{c.channel.num_paths}-path channel')
    if c.sweep_steps < 2:
        _fail(c, 'sweep.steps', f'steps must be at least 2, got {c.sweep_steps}')
    if c.sweep_error_fn not in ERROR_FUNCTIONS:
        _fail(c, 'sweep.error_fn', f'error_fn must be one of {ERROR_FUNCTIONS}, got {c.sweep_error_fn!r}')
    if c.sweep_axis not in SWEEP_AXES:
        _fail(c, 'sweep.axis', f'axis must be one of {SWEEP_AXES}, got {c.sweep_axis!r}')
    if c.sweep_axis == 'lambda' and not c.sweep_parameter.startswith('tau'):
        _fail(c, 'sweep.axis', 'the lambda axis only applies to delay sweeps')
    if not 0 <= c.seed < 2 ** 64:
        _fail(c, 'run.seed', f'seed must be an unsigned 64-bit integer, got {c.seed}')


def _read_file(path):
    """Returns {dotted key: raw value} and {dotted key: line number}."""
    parser = configparser.ConfigParser(interpolation=None)
    with open(path) as fh:
        text = fh.read()

    try:
        parser.read_string(text, source=str(path))
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError('key outside of any [section]', path=path, line=e.lineno) from e
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigError(e.message.split(': ', 1)[-1], path=path, line=e.lineno) from e
    except configparser.ParsingError as e:
        line = e.errors[0][0] if e.errors else None
        raise ConfigError('malformed line', path=path, line=line) from e

    lines, section = {}, None
    for number, raw in enumerate(text.splitlines(), start=1):
        header = _SECTION.match(raw)
        if header:
            section = header.group(1).strip()
            continue
        key = _KEY.match(raw)
        if key and section is not None:
            lines[f'{section}.{key.group(1).strip().lower()}'] = number

    values = {f'{section}.{key}': value
              for section in parser.sections()
              for key, value in parser.items(section)}
    return values, lines


def _parse_override(text):
    if '=' not in text:
        raise ConfigError(f'override {text!r} is not of the form section.key=value', path='--set')
    key, value = text.split('=', 1)
    return key.strip().lower(), value.strip()


def load_config(path=None, overrides=(), **flags):
    """
    Reads a scenario file (optional), applies ``--set`` overrides and the global flags, and
    returns a validated ``ScenarioConfig``.

    :param str  path:      Scenario file. (Default: None, built-in defaults only)
    :param list overrides: ``section.key=value`` strings; later entries win.
    :param      flags:     ``seed`` and ``mode`` shortcuts from the command line.
    """
    raw, source = {}, {}
    if path is not None:
        raw, lines = _read_file(path)
        source = {key: (path, line) for key, line in lines.items()}

    for text in overrides or ():
        key, value = _parse_override(text)
        raw[key] = value
        source[key] = ('--set', None)

    for flag in ('seed', 'mode'):
        if flags.get(flag) is not None:
            key = 'run.seed' if flag == 'seed' else 'estimate.mode'
            raw[key] = str(flags[flag])
            source[key] = (f'--{flag}', None)

    values = parse_values(AllowedKeys.SCENARIO, raw, locate=lambda key: source.get(key, (None, None)))
    return build_config(values, source)


def _locate(source, section, message):
    """Where a section's values came from: the key named in ``message`` if any, else its first key."""
    keys = sorted((key for key in source if key.startswith(f'{section}.')),
                  key=lambda key: (source[key][1] is None, source[key][1] or 0))
    named = [key for key in keys if re.search(rf'\b{re.escape(key.split(".", 1)[1])}\b', message)]
    return source[(named or keys)[0]] if keys else (None, None)


def _build_section(source, section, factory, *args, **kwargs):
    try:
        return factory(*args, **kwargs)
    except DomainError as e:
        path, line = _locate(source, section, str(e))
        raise ConfigError(str(e), path=path, line=line) from e


def build_config(values: dict, source=None):
    """Assembles a ``ScenarioConfig`` from parsed dotted keys; missing keys keep their defaults."""
    v = values.get
    source = dict(source or {})
    defaults = ScenarioConfig.__dataclass_fields__

    chirp = _build_section(source, 'chirp', ChirpSpec, n_sig=v('chirp.n_sig', 750), n_w=v('chirp.n_w'),
                           f1=v('chirp.f1', 0.1), f2=v('chirp.f2', 0.15))
    channel = _build_section(source, 'channel', MultipathChannel,
                             v('channel.amplitudes', [1.0, -0.8, 0.4]), v('channel.delays', [200, 204, 220]))
    record_len = v('record.length', 1000)

    snr_db = v('noise.snr_db', NOISELESS)
    if v('noise.noiseless', False):
        snr_db = NOISELESS

    ga = _build_section(source, 'ga', GaConfig,
                        **{key.split('.', 1)[1]: value for key, value in values.items() if key.startswith('ga.')})

    return ScenarioConfig(chirp=chirp,
                          channel=channel,
                          t_s=v('channel.t_s', 1.0),
                          record_len=record_len,
                          snr_db=snr_db,
                          threshold_frac=v('estimate.threshold_frac', 0.1),
                          mode=v('estimate.mode', 'full'),
                          polish=v('estimate.polish'),
                          num_paths=v('estimate.num_paths'),
                          delay_bounds=(v('estimate.delay_min', 0.0),
                                        v('estimate.delay_max', float(delay_period(record_len)))),
                          amplitude_bounds=(v('estimate.amplitude_min', -2.0), v('estimate.amplitude_max', 2.0)),
                          delay_bits=v('estimate.delay_bits', 16),
                          amplitude_bits=v('estimate.amplitude_bits', 12),
                          ga=ga,
                          trials=v('bench.trials', 50),
                          snr_list=tuple(v('bench.snr_list', defaults['snr_list'].default)),
                          workers=v('bench.workers', 1),
                          sweep_parameter=v('sweep.parameter', 'tau1'),
                          sweep_start=v('sweep.start'),
                          sweep_stop=v('sweep.stop'),
                          sweep_steps=v('sweep.steps', 1000),
                          sweep_error_fn=v('sweep.error_fn', 'thresholded'),
                          sweep_axis=v('sweep.axis', 'tau'),
                          seed=v('run.seed', 1),
                          source=dict(source or {}))
