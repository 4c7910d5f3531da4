"""
End-to-end multipath parameter estimation and Monte-Carlo error metrics.

Two search modes are available:

``full``
    The GA searches the joint 2M-dimensional box of real amplitudes and delays and
    minimizes the thresholded complex-amplitude error function directly.
``hybrid``
    The GA searches the M delays only; for every delay hypothesis the amplitudes are
    the real least-squares optimum (variable projection). The first generation carries
    a matrix-pencil estimate of the delays and the GA optimum is refined with
    Nelder-Mead. This is an extension and never the default.
"""
from    dataclasses import dataclass, field
import  logging
import  time

import  numpy as np
import  scipy.optimize

from    multipathga import error_fn, spectral
from    multipathga.error import ConditioningError, DomainError, EstimationError
from    multipathga.error_fn import ParamVector
from    multipathga.ga_optimizer import GaConfig, GaHistory, Gene, GeneLayout, run_ga
from    multipathga.signal_synth import MultipathChannel, SampledSignal

logger = logging.getLogger(__name__)

MODES = {'full': 'full', 'full_ga': 'full', 'hybrid': 'hybrid', 'hybrid_ga_ls': 'hybrid'}
IMAGINARY_WARNING = 0.05

# initial Nelder-Mead simplex edges, well inside one carrier period
DELAY_STEP = 0.25
AMPLITUDE_STEP = 0.05


def delay_period(record_len):
    """Samples after which E_c repeats in every delay: the (even) DFT length."""
    return record_len + record_len % 2


@dataclass(frozen=True, eq=False)
class EstimationTask():
    """
    :param SampledSignal received:         Received record.
    :param SampledSignal pulse:            Known transmitted pulse.
    :param int           num_paths:        Number of paths M to fit.
    :param float         threshold_frac:   Support threshold as a fraction of the peak pulse magnitude. (Default: 0.1)
    :param str           mode:             'full' (joint GA search) or 'hybrid'. (Default: 'full')
    :param GaConfig      ga:               GA settings; ``ga.seed`` drives the search.
    :param bool          polish:           Refine the GA optimum with Nelder-Mead.
                                           (Default: on in hybrid mode, off in full mode)
    :param tuple         delay_bounds:     Delay search range in samples. (Default: [0, DFT length])
    :param tuple         amplitude_bounds: Amplitude search range in full mode. (Default: [-2, 2])
    """
    received: SampledSignal
    pulse: SampledSignal
    num_paths: int = 1
    threshold_frac: float = spectral.DEFAULT_THRESHOLD_FRAC
    mode: str = 'full'
    ga: GaConfig = field(default_factory=GaConfig)
    polish: bool = None
    delay_bounds: tuple = None
    amplitude_bounds: tuple = (-2.0, 2.0)
    delay_bits: int = 16
    amplitude_bits: int = 12

    def __post_init__(self):
        if self.num_paths < 1:
            raise DomainError(f'num_paths must be at least 1, got {self.num_paths}')
        if len(self.pulse) > len(self.received):
            raise DomainError('pulse is longer than the received record')
        if self.mode not in MODES:
            raise DomainError(f'unknown estimation mode {self.mode!r}')
        if not np.any(self.pulse.samples):
            raise DomainError('pulse is identically zero')
        object.__setattr__(self, 'mode', MODES[self.mode])

        if self.polish is None:
            object.__setattr__(self, 'polish', self.mode == 'hybrid')
        if self.delay_bounds is None:
            object.__setattr__(self, 'delay_bounds', (0.0, float(delay_period(len(self.received)))))


@dataclass(eq=False)
class ChannelEstimate():
    channel: MultipathChannel
    objective_at_estimate: float
    residual_imag_norm: float = 0.0
    history: GaHistory = field(default_factory=GaHistory)
    quality_warning: bool = False
    wall_time: float = 0.0

    @property
    def generations(self):
        return len(self.history)


def trial_seed(master_seed, trial_index, stream=0):
    """Independent 64-bit seed for one Monte-Carlo trial; ``stream`` separates noise from search."""
    state = np.random.SeedSequence([master_seed, trial_index, stream]).generate_state(1, dtype=np.uint64)
    return int(state[0])


def _layout(task: EstimationTask):
    delay_lo, delay_hi = task.delay_bounds
    delays = [Gene(delay_lo, delay_hi, task.delay_bits, f'tau{k + 1}') for k in range(task.num_paths)]
    if task.mode == 'hybrid':
        return GeneLayout(delays)

    amp_lo, amp_hi = task.amplitude_bounds
    amplitudes = [Gene(amp_lo, amp_hi, task.amplitude_bits, f'a{k + 1}') for k in range(task.num_paths)]
    return GeneLayout(amplitudes + delays)


class _Objective():
    """E_c as a function of the searched vector; delays arrive in samples, amplitudes are real."""

    def __init__(self, support, task: EstimationTask):
        self.support = support
        self.mode = task.mode
        self.num_paths = task.num_paths
        self.t_s = task.received.t_s

    def amplitudes_for(self, delays, max_condition=error_fn.MAX_CONDITION, real=True):
        lam = spectral.tau_to_lambda(np.asarray(delays) * self.t_s, self.support.n_fft, self.t_s)
        return error_fn.ls_amplitudes(self.support, lam, max_condition, real=real)

    def params(self, x, max_condition=error_fn.MAX_CONDITION):
        if self.mode == 'hybrid':
            return ParamVector(self.amplitudes_for(x, max_condition), np.asarray(x) * self.t_s)
        return ParamVector(x[:self.num_paths], np.asarray(x[self.num_paths:]) * self.t_s)

    def __call__(self, x):
        try:
            return error_fn.caef_thresholded(self.support, self.params(x))
        except ConditioningError:
            # degenerate delay hypothesis scores like the empty model
            return self.support.received_energy

    def steps(self):
        if self.mode == 'hybrid':
            return np.full(self.num_paths, DELAY_STEP)
        return np.concatenate([np.full(self.num_paths, AMPLITUDE_STEP), np.full(self.num_paths, DELAY_STEP)])


def starting_delays(support, task: EstimationTask):
    """
    Matrix-pencil delays (samples) folded into the delay search range, or None when
    the record carries no energy or the band is too short to resolve the paths.
    """
    if support.received_energy == 0:
        return None
    lam = spectral.subspace_lambdas(support, task.num_paths)
    if lam is None or not np.all(np.isfinite(lam)):
        return None

    period = support.n_fft
    delays = spectral.lambda_to_tau(lam, period)
    center = 0.5 * sum(task.delay_bounds)
    return np.sort(center + np.mod(delays - center + period / 2, period) - period / 2)


def _polish(objective: _Objective, x0, value):
    x0 = np.asarray(x0, dtype=float)
    simplex = np.vstack([x0, x0 + np.diag(objective.steps())])
    result = scipy.optimize.minimize(objective, x0, method='Nelder-Mead',
                                     options={'initial_simplex': simplex,
                                              'xatol': 1e-7,
                                              'fatol': 1e-14 * max(value, 1.0),
                                              'maxiter': 600 * x0.size})
    if result.fun < value:
        logger.debug('polish lowered E_c from %.6g to %.6g', value, result.fun)
        return np.asarray(result.x), float(result.fun)
    return x0, value


def estimate(task: EstimationTask, rng=None, map_fn=map):
    """
    Pulse zero-padded to the record length, both transformed, support selected, then
    E_c minimized by the GA in the task's mode. Paths are returned sorted by delay,
    delays folded into one period of E_c.

    :raises NoUsableBandError: if the threshold leaves no bins.
    :raises EstimationError:   if more paths are requested than usable bins exist.
    :raises GaRunError:        if the objective fails during the search.
    """
    started = time.perf_counter()
    support, _, _ = spectral.prepare_support(task.received, task.pulse, task.threshold_frac)
    if task.num_paths > support.size:
        raise EstimationError(f'{task.num_paths} paths requested but only {support.size} usable bins')

    objective = _Objective(support, task)
    layout = _layout(task)

    starting_points = None
    if task.mode == 'hybrid':
        delays = starting_delays(support, task)
        if delays is not None:
            logger.debug('matrix-pencil delays %s', np.round(delays, 3).tolist())
            starting_points = [delays]

    result = run_ga(objective, layout, task.ga, rng=rng, map_fn=map_fn, starting_points=starting_points)

    x, value = result.best, result.best_objective
    if task.polish:
        x, value = _polish(objective, x, value)

    # a degenerate optimum still gets the minimum-norm amplitudes
    params = objective.params(x, max_condition=np.inf)
    t_s = task.received.t_s
    channel = MultipathChannel(np.real(params.amplitudes),
                               np.mod(params.delays / t_s, support.n_fft)).sorted()
    final = error_fn.caef_thresholded(support, ParamVector(channel.amplitudes, channel.delays * t_s))

    # complex amplitudes at the found delays diagnose model mismatch
    imag_norm = 0.0
    if task.mode == 'hybrid':
        imag_norm = error_fn.imaginary_fraction(objective.amplitudes_for(channel.delays, np.inf, real=False))

    warn = imag_norm > IMAGINARY_WARNING
    if warn:
        logger.warning('complex amplitudes at the estimate carry a %.1f%% imaginary part', 100 * imag_norm)

    elapsed = time.perf_counter() - started
    logger.info('estimated %d paths in %d generations (%.2fs): delays=%s amplitudes=%s E_c=%.6g',
                task.num_paths, result.generations, elapsed,
                np.round(channel.delays, 3).tolist(), np.round(channel.amplitudes, 4).tolist(), final)

    return ChannelEstimate(channel=channel,
                           objective_at_estimate=final,
                           residual_imag_norm=imag_norm,
                           history=result.history,
                           quality_warning=warn,
                           wall_time=elapsed)


def parameter_names(num_paths):
    return [f'a{k + 1}' for k in range(num_paths)] + [f'tau{k + 1}' for k in range(num_paths)]


def squared_errors(estimates, truth: MultipathChannel):
    """
    (runs, 2M) array of squared errors, columns ordered a1..aM, tau1..tauM.
    Paths are paired with the truth by ascending delay; delays are in samples.
    """
    truth = truth.sorted()
    rows = []
    for est in estimates:
        channel = est.channel if isinstance(est, ChannelEstimate) else est
        if channel.num_paths != truth.num_paths:
            raise DomainError(f'estimate has {channel.num_paths} paths, truth has {truth.num_paths}')
        channel = channel.sorted()
        rows.append(np.concatenate([np.real(channel.amplitudes) - truth.amplitudes,
                                    channel.delays - truth.delays]) ** 2)

    return np.array(rows).reshape(len(rows), 2 * truth.num_paths)


def parameter_mse(estimates, truth: MultipathChannel):
    """Per-parameter mean squared error over the runs, keyed a1..aM, tau1..tauM."""
    if not estimates:
        raise DomainError('no estimates to score')
    errors = squared_errors(estimates, truth)
    return dict(zip(parameter_names(truth.num_paths), errors.mean(axis=0).tolist()))
