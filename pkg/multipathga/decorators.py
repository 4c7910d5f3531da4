from    functools import wraps
import  logging
import  math

import  multipathga.error

logger = logging.getLogger(__name__)


def _boolean(value: str):
    lowered = value.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f'expected a boolean, got {value!r}')


def _snr(value: str):
    lowered = value.strip().lower()
    if lowered in ('inf', '+inf', 'none', 'noiseless'):
        return math.inf
    return float(lowered)


def _floats(value: str):
    return [float(v) for v in value.replace(',', ' ').split()]


def _snrs(value: str):
    return [_snr(v) for v in value.replace(',', ' ').split()]


def _process_allowed_keys(allowed_keys, data, locate=None):
    """
    Rejects any key of ``data`` missing from ``allowed_keys``.

    :param callable locate: maps a key to (path, line) for the error message.
    """
    if allowed_keys is None:
        return

    for key in data.keys():
        if key not in allowed_keys:
            path, line = locate(key) if locate else (None, None)
            raise multipathga.error.InvalidKeysException(f'unknown configuration key "{key}"', path=path, line=line)


def parse_values(allowed_keys, data, locate=None):
    """Converts raw strings into the types declared by ``allowed_keys``."""
    _process_allowed_keys(allowed_keys, data, locate)

    parsed = {}
    for key, raw in data.items():
        try:
            parsed[key] = allowed_keys[key](raw)
        except ValueError as e:
            path, line = locate(key) if locate else (None, None)
            raise multipathga.error.ConfigError(f'bad value for "{key}": {e}', path=path, line=line) from e
    return parsed


def command(*args, **kwargs):
    """
    Marks a CLI command. The wrapped function is called as ``fn(config, options)`` only after
    ``loader(options)`` returned a fully validated configuration; every package error is
    turned into the matching process exit code.
    """
    name = args[0]
    loader = kwargs.get('loader')

    def set_command(*eargs):
        fn = eargs[0]

        @wraps(fn)
        def wrapper(options):
            try:
                config = loader(options)
            except (multipathga.error.ConfigError, multipathga.error.DomainError) as e:
                logger.error('%s: invalid configuration: %s', name, e)
                return multipathga.error.EXIT_CONFIG
            except OSError as e:
                logger.error('%s: cannot read configuration: %s', name, e)
                return multipathga.error.EXIT_IO

            try:
                fn(config, options)
            except multipathga.error.MultipathError as e:
                logger.error('%s failed: %s', name, e)
                return e.exit_code
            except OSError as e:
                logger.error('%s: I/O error: %s', name, e)
                return multipathga.error.EXIT_IO

            return multipathga.error.EXIT_OK

        wrapper.command_name = name
        return wrapper
    return set_command


class AllowedKeys():
    SCENARIO = {'chirp.n_sig': int, 'chirp.n_w': int, 'chirp.f1': float, 'chirp.f2': float,

                'channel.amplitudes': _floats, 'channel.delays': _floats, 'channel.t_s': float,

                'record.length': int,

                'noise.snr_db': _snr, 'noise.noiseless': _boolean,

                'estimate.num_paths': int, 'estimate.threshold_frac': float, 'estimate.mode': str,
                'estimate.polish': _boolean,
                'estimate.delay_min': float, 'estimate.delay_max': float,
                'estimate.amplitude_min': float, 'estimate.amplitude_max': float,
                'estimate.delay_bits': int, 'estimate.amplitude_bits': int,

                'ga.population_size': int, 'ga.crossover_prob': float, 'ga.mutation_prob': float,
                'ga.elitism_count': int, 'ga.crossover_points': int, 'ga.termination': str,
                'ga.max_generations': int, 'ga.plateau_window': int, 'ga.plateau_epsilon': float,

                'bench.trials': int, 'bench.snr_list': _snrs, 'bench.workers': int,

                'sweep.parameter': str, 'sweep.start': float, 'sweep.stop': float, 'sweep.steps': int,
                'sweep.error_fn': str, 'sweep.axis': str,

                'run.seed': int}
