"""
Command-line front end.

  multipathga synth     writes the pulse, noiseless and received records as CSV
  multipathga sweep     one-parameter slice of an error function, others held at truth
  multipathga estimate  one estimation run: report + GA convergence history
  multipathga bench     Monte-Carlo MSE per parameter over a list of SNRs

Every CSV starts with ``#`` metadata lines (tool version, master seed, config hash)
followed by a header row. Floats are written with 17 significant digits.
"""
import  argparse
from    concurrent.futures import ProcessPoolExecutor
import  csv
import  logging
import  os
import  re
import  sys

import  numpy as np

import  multipathga
from    multipathga import error_fn, spectral
from    multipathga.config import ScenarioConfig, load_config
from    multipathga.decorators import command
from    multipathga.error_fn import ParamVector
from    multipathga.estimator import estimate, parameter_names, squared_errors, trial_seed
from    multipathga.signal_synth import AwgnSpec, add_awgn, apply_channel, empirical_snr_db, generate_chirp

logger = logging.getLogger(__name__)

NOISE_STREAM = 0
GA_STREAM = 1

_PARAMETER = re.compile(r'^(tau|a)(\d+)$')


def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(value)
    if isinstance(value, (float, np.floating)):
        return f'{value:.17g}'
    return str(value)


def write_csv(path, header, rows, config: ScenarioConfig, **metadata):
    """Writes ``rows`` under the metadata comment block and ``header``."""
    directory = os.path.dirname(os.fspath(path))
    if directory:
        os.makedirs(directory, exist_ok=True)

    with open(path, 'w', newline='') as fh:
        fh.write(f'# multipathga {multipathga.__version__}\n')
        fh.write(f'# master_seed = {config.seed}\n')
        fh.write(f'# config_hash = {config.digest}\n')
        for key, value in metadata.items():
            fh.write(f'# {key} = {fmt(value)}\n')

        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path):
    """Returns (metadata, header, rows) of a file written by ``write_csv``; values stay strings."""
    metadata, lines = {}, []
    with open(path, newline='') as fh:
        for line in fh:
            if line.startswith('#'):
                key, _, value = line[1:].partition('=')
                metadata[key.strip()] = value.strip()
            else:
                lines.append(line)

    reader = csv.reader(lines)
    header = next(reader)
    return metadata, header, list(reader)


def synthesize(config: ScenarioConfig, snr_db=None, trial_index=0):
    """Returns (pulse, noiseless record, received record) for one trial."""
    snr_db = config.snr_db if snr_db is None else snr_db
    pulse = generate_chirp(config.chirp, t_s=config.t_s)
    clean = apply_channel(pulse, config.channel, config.record_len)
    received = add_awgn(clean, AwgnSpec(snr_db, seed=trial_seed(config.seed, trial_index, NOISE_STREAM)))
    return pulse, clean, received


def ga_seed(config: ScenarioConfig, trial_index=0):
    return trial_seed(config.seed, trial_index, GA_STREAM)


def truth_params(config: ScenarioConfig):
    return ParamVector(config.channel.amplitudes.astype(complex), config.channel.delays * config.t_s)


def sweep_values(config: ScenarioConfig):
    """Grid of the swept parameter in the units it is swept in (samples, lambda or amplitude)."""
    is_delay = config.sweep_parameter.startswith('tau')
    if config.sweep_axis == 'lambda':
        default = (0.0, -2 * np.pi * (config.record_len - 1) / config.record_len)
    elif is_delay:
        default = (0.0, float(config.record_len - 1))
    else:
        default = config.amplitude_bounds

    start = default[0] if config.sweep_start is None else config.sweep_start
    stop = default[1] if config.sweep_stop is None else config.sweep_stop
    return np.linspace(start, stop, config.sweep_steps)


def error_surface(config: ScenarioConfig, values):
    """E for each swept value, every other parameter at the configured truth."""
    pulse, _, received = synthesize(config)
    support, R, S = spectral.prepare_support(received, pulse, config.threshold_frac)

    kind, number = _PARAMETER.match(config.sweep_parameter).groups()
    index, is_delay = int(number) - 1, kind == 'tau'
    truth = truth_params(config)

    surface = []
    for value in values:
        amplitudes, delays = truth.amplitudes.copy(), truth.delays.copy()
        if config.sweep_axis == 'lambda':
            delays[index] = spectral.lambda_to_tau(value, R.n_fft, config.t_s)
        elif is_delay:
            delays[index] = value * config.t_s
        else:
            amplitudes[index] = value

        if config.sweep_error_fn == 'raef':
            surface.append(error_fn.raef(R, S, ParamVector(amplitudes.real, delays), config.t_s))
        elif config.sweep_error_fn == 'full':
            surface.append(error_fn.caef_full(R, S, ParamVector(amplitudes, delays), config.t_s))
        else:
            surface.append(error_fn.caef_thresholded(support, ParamVector(amplitudes, delays)))

    return np.array(surface)


@command('synth', loader=lambda options: _load(options))
def cmd_synth(config: ScenarioConfig, options):
    out = options.out or 'synth'
    pulse, clean, received = synthesize(config)

    write_csv(os.path.join(out, 'pulse.csv'), ['index', 'value'], enumerate(pulse.samples), config)
    write_csv(os.path.join(out, 'noiseless.csv'), ['index', 'value'], enumerate(clean.samples), config)
    write_csv(os.path.join(out, 'received.csv'), ['index', 'value'], enumerate(received.samples), config,
              snr_db=config.snr_db)
    write_csv(os.path.join(out, 'channel.csv'), ['path', 'amplitude', 'delay'],
              [(k + 1, a, d) for k, (a, d) in enumerate(zip(config.channel.amplitudes, config.channel.delays))],
              config)

    print(f'record power: {fmt(clean.power)}')
    if not config.noiseless:
        print(f'empirical SNR: {empirical_snr_db(clean, received):.3f} dB (target {config.snr_db:g} dB)')


@command('sweep', loader=lambda options: _load(options, sweep=True))
def cmd_sweep(config: ScenarioConfig, options):
    out = options.out or 'sweep.csv'
    values = sweep_values(config)
    surface = error_surface(config, values)

    write_csv(out, ['parameter_value', 'E_c'], zip(values, surface), config,
              parameter=config.sweep_parameter, error_fn=config.sweep_error_fn, axis=config.sweep_axis)

    best = int(np.argmin(surface))
    print(f'argmin {config.sweep_parameter} = {fmt(values[best])} (E = {fmt(surface[best])})')
    if not config.sweep_parameter.startswith('tau'):
        print(f'vertex {config.sweep_parameter} = {fmt(error_fn.parabola_vertex(values, surface))}')


def estimate_once(config: ScenarioConfig, snr_db=None, trial_index=0):
    pulse, _, received = synthesize(config, snr_db, trial_index)
    return estimate(config.task(received, pulse, ga_seed(config, trial_index)))


@command('estimate', loader=lambda options: _load(options))
def cmd_estimate(config: ScenarioConfig, options):
    out = options.out or 'estimate'
    result = estimate_once(config)
    channel = result.channel

    rows = [(name, value) for name, value in zip(parameter_names(channel.num_paths),
                                                   np.concatenate([channel.amplitudes, channel.delays]))]
    rows += [('objective', result.objective_at_estimate),
             ('residual_imag_norm', result.residual_imag_norm),
             ('quality_warning', result.quality_warning),
             ('generations', result.generations),
             ('wall_time', result.wall_time)]

    write_csv(os.path.join(out, 'report.csv'), ['field', 'value'], rows, config, mode=config.mode)
    write_csv(os.path.join(out, 'history.csv'), ['generation', 'best_E_c', 'mean_E_c'],
              zip(range(len(result.history)), result.history.best, result.history.mean), config)

    for k in range(channel.num_paths):
        print(f'path {k + 1}: a = {channel.amplitudes[k]:+.6f}  tau = {channel.delays[k]:.4f}')
    print(f'E_c = {fmt(result.objective_at_estimate)}  generations = {result.generations}  '
          f'wall time = {result.wall_time:.2f}s')


def _bench_trial(job):
    config, snr_db, trial_index = job
    return estimate_once(config, snr_db, trial_index).channel


def run_bench(config: ScenarioConfig):
    """
    Runs ``config.trials`` seeded estimations per SNR. Trial seeds depend only on
    (master seed, trial index), so results do not depend on ``config.workers``.

    :returns list of (snr_db, {name: mse}, {name: median squared error}) in snr_list order.
    """
    jobs = [(config, snr_db, position * config.trials + trial)
            for position, snr_db in enumerate(config.snr_list)
            for trial in range(config.trials)]

    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            channels = list(pool.map(_bench_trial, jobs))
    else:
        channels = [_bench_trial(job) for job in jobs]

    names = parameter_names(config.channel.num_paths)
    results = []
    for position, snr_db in enumerate(config.snr_list):
        batch = channels[position * config.trials:(position + 1) * config.trials]
        errors = squared_errors(batch, config.channel)
        results.append((snr_db,
                        dict(zip(names, errors.mean(axis=0).tolist())),
                        dict(zip(names, np.median(errors, axis=0).tolist()))))
        logger.info('snr %s dB: %s', snr_db, results[-1][1])

    return results


@command('bench', loader=lambda options: _load(options, bench=True))
def cmd_bench(config: ScenarioConfig, options):
    out = options.out or 'bench.csv'
    results = run_bench(config)

    rows = [(snr_db, name, mse[name], config.trials, median[name])
            for snr_db, mse, median in results
            for name in parameter_names(config.channel.num_paths)]
    write_csv(out, ['snr_db', 'parameter_name', 'mse', 'trials', 'median_se'], rows, config, mode=config.mode)

    for snr_db, mse, _ in results:
        print(f'SNR {snr_db:g} dB: ' + '  '.join(f'{name}={value:.4g}' for name, value in mse.items()))


def _load(options, sweep=False, bench=False):
    overrides = list(options.set or [])
    if sweep:
        for key in ('parameter', 'start', 'stop', 'steps', 'error_fn', 'axis'):
            if getattr(options, key, None) is not None:
                overrides.append(f'sweep.{key}={getattr(options, key)}')
    if bench:
        for key in ('trials', 'workers'):
            if getattr(options, key, None) is not None:
                overrides.append(f'bench.{key}={getattr(options, key)}')

    config = load_config(options.config, overrides, seed=options.seed, mode=options.mode)
    if config.num_paths != config.channel.num_paths:
        logger.info('fitting %d paths to a %d-path record', config.num_paths, config.channel.num_paths)
    return config


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='scenario file (INI, dotted section.key names)')
    common.add_argument('--seed', type=int, help='master seed, overrides run.seed')
    common.add_argument('--out', help='output file or directory')
    common.add_argument('--mode', choices=['full', 'hybrid'], help='overrides estimate.mode')
    common.add_argument('--set', action='append', metavar='SECTION.KEY=VALUE', help='override any config key')
    common.add_argument('--log-level', default='WARNING', help='logging level (default: WARNING)')
    common.add_argument('-v', '--verbose', action='store_true', help='shortcut for --log-level INFO')

    parser = argparse.ArgumentParser(prog='multipathga',
                                     description='Multipath delay/attenuation estimation with a genetic algorithm.')
    parser.add_argument('--version', action='version', version=f'%(prog)s {multipathga.__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    commands.add_parser('synth', parents=[common], help='write pulse and received records') \
            .set_defaults(handler=cmd_synth)

    sweep = commands.add_parser('sweep', parents=[common], help='error-function slice over one parameter')
    sweep.add_argument('parameter', nargs='?', help='tau1..tauM or a1..aM')
    sweep.add_argument('--start', type=float)
    sweep.add_argument('--stop', type=float)
    sweep.add_argument('--steps', type=int)
    sweep.add_argument('--error-fn', dest='error_fn', choices=['thresholded', 'full', 'raef'])
    sweep.add_argument('--axis', choices=['tau', 'lambda'])
    sweep.set_defaults(handler=cmd_sweep)

    commands.add_parser('estimate', parents=[common], help='run one estimation') \
            .set_defaults(handler=cmd_estimate)

    bench = commands.add_parser('bench', parents=[common], help='MSE versus SNR benchmark')
    bench.add_argument('--trials', type=int)
    bench.add_argument('--workers', type=int)
    bench.set_defaults(handler=cmd_bench)

    return parser


def main(argv=None):
    options = build_parser().parse_args(argv)
    level = 'INFO' if options.verbose else options.log_level.upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    return options.handler(options)


if __name__ == '__main__':
    sys.exit(main())
