"""
Transmitted pulse generation and synthetic multipath received records.

The transmitted pulse is a linear FM chirp with raised-cosine edges. Received
records are built as a sum of delayed, attenuated copies of that pulse plus
white Gaussian noise scaled against the power of the noiseless record.
"""
from    dataclasses import dataclass
import  logging
import  math

import  numpy as np

from    multipathga.error import DomainError

logger = logging.getLogger(__name__)

NOISELESS = math.inf


@dataclass(frozen=True)
class ChirpSpec():
    """
    Parameters of the windowed linear FM pulse.

    :param int   n_sig: Number of pulse samples. (Default: 750)
    :param int   n_w:   Length of each raised-cosine edge, in samples. (Default: n_sig // 10, at least 1)
    :param float f1:    Start frequency, cycles/sample. (Default: 0.1)
    :param float f2:    End frequency, cycles/sample. (Default: 0.15)
    """
    n_sig: int = 750
    n_w: int = None
    f1: float = 0.1
    f2: float = 0.15

    def __post_init__(self):
        if self.n_w is None:
            object.__setattr__(self, 'n_w', max(1, self.n_sig // 10))

        if self.n_sig <= 0:
            raise DomainError(f'n_sig must be positive, got {self.n_sig}')
        if not 0 < self.n_w <= self.n_sig / 2:
            raise DomainError(f'n_w must lie in (0, n_sig/2], got {self.n_w}')
        if not 0 < self.f1 < self.f2 < 0.5:
            raise DomainError(f'expected 0 < f1 < f2 < 0.5, got f1={self.f1}, f2={self.f2}')

    @property
    def sweep_rate(self):
        """Quadratic phase coefficient, (f2 - f1) / (2 n_sig)."""
        return (self.f2 - self.f1) / (2 * self.n_sig)


@dataclass(frozen=True, eq=False)
class SampledSignal():
    """
    A real, uniformly sampled record.

    :param ndarray samples: Sample values.
    :param float   t_s:     Sampling interval in seconds. (Default: 1.0)
    """
    samples: np.ndarray
    t_s: float = 1.0

    def __post_init__(self):
        samples = np.array(self.samples, dtype=float)
        samples.setflags(write=False)
        object.__setattr__(self, 'samples', samples)

        if samples.ndim != 1 or samples.size < 1:
            raise DomainError('a sampled signal needs at least one sample')
        if not np.all(np.isfinite(samples)):
            raise DomainError('signal samples must be finite')
        if not self.t_s > 0:
            raise DomainError(f't_s must be positive, got {self.t_s}')

    def __len__(self):
        return self.samples.size

    @property
    def duration(self):
        return len(self) * self.t_s

    @property
    def power(self):
        return float(np.mean(self.samples ** 2))


@dataclass(frozen=True, eq=False)
class MultipathChannel():
    """
    Path amplitudes and delays. Delays are expressed in samples (units of t_s).
    """
    amplitudes: np.ndarray
    delays: np.ndarray

    def __post_init__(self):
        amplitudes = np.atleast_1d(np.array(self.amplitudes))
        delays = np.atleast_1d(np.array(self.delays, dtype=float))

        if amplitudes.size != delays.size:
            raise DomainError(f'{amplitudes.size} amplitudes given for {delays.size} delays')
        if amplitudes.size < 1:
            raise DomainError('a channel needs at least one path')
        if not (np.all(np.isfinite(amplitudes)) and np.all(np.isfinite(delays))):
            raise DomainError('channel parameters must be finite')
        if np.any(delays < 0):
            raise DomainError('path delays must be nonnegative')

        for values in (amplitudes, delays):
            values.setflags(write=False)
        object.__setattr__(self, 'amplitudes', amplitudes)
        object.__setattr__(self, 'delays', delays)

    @property
    def num_paths(self):
        return self.delays.size

    def sorted(self):
        """Returns the same channel with paths ordered by ascending delay."""
        order = np.argsort(self.delays, kind='stable')
        return MultipathChannel(self.amplitudes[order], self.delays[order])

    def concat(self, other):
        return MultipathChannel(np.concatenate([self.amplitudes, other.amplitudes]),
                                np.concatenate([self.delays, other.delays]))


@dataclass(frozen=True)
class AwgnSpec():
    """
    :param float snr_db: Target SNR against the noiseless record power. ``NOISELESS`` disables noise.
    :param int   seed:   Seed of the noise generator (0 <= seed < 2**64).
    """
    snr_db: float = NOISELESS
    seed: int = 0

    def __post_init__(self):
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise DomainError(f'snr_db must be finite or +inf, got {self.snr_db}')
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError(f'seed must be an unsigned 64-bit integer, got {self.seed}')

    @property
    def noiseless(self):
        return self.snr_db == NOISELESS


def _edge_window(n, spec):
    n = np.asarray(n, dtype=float)
    n_sig, n_w = spec.n_sig, spec.n_w

    return np.where(n < n_w, 0.5 - 0.5 * np.cos(np.pi * n / n_w),
                    np.where(n < n_sig - n_w, 1.0,
                             0.5 - 0.5 * np.cos(np.pi * (n - n_sig) / n_w)))


def window_value(n, spec: ChirpSpec):
    """
    Raised-cosine edge window at sample ``n``: a cosine ramp over the first n_w samples,
    flat in the middle and a mirrored ramp over the last n_w samples.
    """
    if not 0 <= n < spec.n_sig:
        raise DomainError(f'window index {n} outside [0, {spec.n_sig})')
    return float(_edge_window(n, spec))


def generate_chirp(spec: ChirpSpec = None, t_s=1.0):
    """
    Samples of the windowed chirp, w[n] sin(2 pi (a n^2 + b n)) with a = (f2 - f1) / (2 n_sig) and b = f1.
    """
    spec = spec or ChirpSpec()
    n = np.arange(spec.n_sig, dtype=float)
    phase = 2 * np.pi * (spec.sweep_rate * n ** 2 + spec.f1 * n)

    return SampledSignal(_edge_window(n, spec) * np.sin(phase), t_s=t_s)


def _shift_exact(pulse, channel, out_len):
    record = np.zeros(out_len)
    for amplitude, delay in zip(channel.amplitudes, channel.delays.astype(int)):
        stop = min(out_len, delay + pulse.size)
        if stop > delay:
            record[delay:stop] += amplitude * pulse[:stop - delay]
    return record


def _shift_fourier(pulse, channel, out_len):
    if pulse.size > out_len:
        raise DomainError(f'fractional delays need out_len >= pulse length ({out_len} < {pulse.size})')

    spectrum = np.fft.rfft(pulse, n=out_len)
    bins = np.arange(spectrum.size)
    # sum_k a_k exp(-j 2 pi n tau_k / N) applied to the positive half; irfft restores symmetry
    response = np.exp(-2j * np.pi * np.outer(bins, channel.delays) / out_len) @ channel.amplitudes
    return np.fft.irfft(spectrum * response, n=out_len)


def apply_channel(pulse: SampledSignal, channel: MultipathChannel, out_len, method='auto'):
    """
    Builds sum_k a_k s[n - tau_k] for n = 0 .. out_len - 1.

    Integer delays are applied as exact shifts and a tail running past ``out_len`` is truncated.
    Non-integer delays use a phase ramp on the zero-padded pulse spectrum, which is exact for a
    periodic band-limited record of length ``out_len``.

    :param str method: 'auto', 'shift' (integer delays only) or 'fourier'.
    """
    if channel is None or channel.num_paths < 1:
        raise DomainError('cannot apply an empty channel')
    if out_len < 1:
        raise DomainError(f'out_len must be positive, got {out_len}')
    if np.any(channel.delays >= out_len):
        raise DomainError(f'path delays must lie in [0, {out_len})')
    if np.iscomplexobj(channel.amplitudes):
        raise DomainError('received records are real; channel amplitudes must be real')

    integral = np.all(channel.delays == np.round(channel.delays))
    if method == 'auto':
        method = 'shift' if integral else 'fourier'

    if method == 'shift':
        if not integral:
            raise DomainError('exact shifting needs integer delays')
        record = _shift_exact(pulse.samples, channel, out_len)
    elif method == 'fourier':
        record = _shift_fourier(pulse.samples, channel, out_len)
    else:
        raise DomainError(f'unknown delay method {method!r}')

    return SampledSignal(record, t_s=pulse.t_s)


def noise_variance(signal: SampledSignal, snr_db):
    power = signal.power
    if power == 0:
        raise DomainError('SNR is undefined for a zero-power record')
    return power / 10 ** (snr_db / 10)


def add_awgn(signal: SampledSignal, spec: AwgnSpec):
    """
    Adds i.i.d. zero-mean Gaussian noise with variance P_r / 10^(snr_db/10), P_r being the mean
    power of ``signal``. Output is deterministic for a fixed seed.
    """
    if spec.noiseless:
        return signal

    sigma = math.sqrt(noise_variance(signal, spec.snr_db))
    rng = np.random.default_rng(spec.seed)
    noise = rng.normal(0.0, sigma, size=len(signal))
    logger.debug('added noise: snr_db=%s sigma=%.6g seed=%d', spec.snr_db, sigma, spec.seed)

    return SampledSignal(signal.samples + noise, t_s=signal.t_s)


def empirical_snr_db(clean: SampledSignal, noisy: SampledSignal):
    noise_power = float(np.mean((noisy.samples - clean.samples) ** 2))
    if noise_power == 0:
        return NOISELESS
    return 10 * math.log10(clean.power / noise_power)
