"""
DFTs, threshold-based bin selection and the steering/projection matrices of the
thresholded complex-amplitude error function.

All spectra use the unnormalized forward convention, bin n = sum_m x[m] exp(-j 2 pi n m / N),
so Parseval reads sum |X[n]|^2 = N sum x[m]^2.
"""
from    dataclasses import dataclass, replace
import  logging

import  numpy as np
import  scipy.linalg

from    multipathga.error import DomainError, NoUsableBandError
from    multipathga.signal_synth import SampledSignal

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD_FRAC = 0.1


@dataclass(frozen=True, eq=False)
class Spectrum():
    bins: np.ndarray
    t_s: float = 1.0

    @property
    def n_fft(self):
        return self.bins.size

    @property
    def positive_half(self):
        """Bins 0 .. N/2 - 1; the Nyquist bin is left out."""
        return self.bins[:self.n_fft // 2]


@dataclass(frozen=True, eq=False)
class ThresholdedSupport():
    """
    The retained positive-frequency bins q_1 < ... < q_L and the spectra restricted to them.

    :param ndarray indices:   Retained bin indices.
    :param float   threshold: Absolute magnitude cutoff that was applied to the pulse spectrum.
    :param ndarray s_diag:    Pulse spectrum at the retained bins (diagonal of S).
    :param ndarray r_tilde:   Received spectrum at the retained bins, or None before one is attached.
    :param int     n_fft:     Length of the DFT the bins index into.
    """
    indices: np.ndarray
    threshold: float
    s_diag: np.ndarray
    r_tilde: np.ndarray = None
    n_fft: int = None
    t_s: float = 1.0

    @property
    def size(self):
        return self.indices.size

    def with_received(self, received: Spectrum):
        if received.n_fft != self.n_fft:
            raise DomainError(f'received spectrum has {received.n_fft} bins, support indexes {self.n_fft}')
        return replace(self, r_tilde=received.bins[self.indices])

    @property
    def received_energy(self):
        """||r~||^2, the error of the all-zero model."""
        return float(np.vdot(self.r_tilde, self.r_tilde).real)


def dft(signal, n_fft):
    """
    Unnormalized forward DFT of ``signal`` zero-padded to ``n_fft`` bins.

    :raises DomainError: if n_fft is odd or shorter than the signal.
    """
    if not isinstance(signal, SampledSignal):
        signal = SampledSignal(signal)

    if n_fft < len(signal):
        raise DomainError(f'n_fft={n_fft} would truncate a {len(signal)}-sample record')
    if n_fft % 2:
        raise DomainError(f'n_fft must be even, got {n_fft}')

    return Spectrum(np.fft.fft(signal.samples, n=n_fft), t_s=signal.t_s)


def select_support(pulse_spectrum: Spectrum, threshold_frac=DEFAULT_THRESHOLD_FRAC, received_spectrum: Spectrum = None):
    """
    Keeps the positive-half bins whose pulse magnitude strictly exceeds
    ``threshold_frac`` times the positive-half peak magnitude.

    :raises NoUsableBandError: when no bin survives the threshold.
    """
    if not 0 < threshold_frac < 1:
        raise DomainError(f'threshold_frac must lie in (0, 1), got {threshold_frac}')

    magnitude = np.abs(pulse_spectrum.positive_half)
    threshold = threshold_frac * float(magnitude.max())
    indices = np.flatnonzero(magnitude > threshold)

    if indices.size == 0:
        raise NoUsableBandError(threshold=threshold)

    logger.debug('support: %d of %d bins above %.6g', indices.size, magnitude.size, threshold)
    support = ThresholdedSupport(indices=indices,
                                 threshold=threshold,
                                 s_diag=pulse_spectrum.bins[indices],
                                 n_fft=pulse_spectrum.n_fft,
                                 t_s=pulse_spectrum.t_s)

    return support if received_spectrum is None else support.with_received(received_spectrum)


def prepare_support(received: SampledSignal, pulse: SampledSignal, threshold_frac=DEFAULT_THRESHOLD_FRAC):
    """
    Zero-pads the pulse to the record length, transforms both and selects the support.
    Returns the support together with the full received and pulse spectra.
    """
    if len(pulse) > len(received):
        raise DomainError(f'pulse ({len(pulse)} samples) is longer than the record ({len(received)})')

    n_fft = len(received) + len(received) % 2
    R = dft(received, n_fft)
    S = dft(pulse, n_fft)

    return select_support(S, threshold_frac, R), R, S


def tau_to_lambda(tau, n_fft, t_s=1.0):
    """Delay (seconds) to per-bin phase rate, lambda = -tau 2 pi / (N T_s)."""
    return -np.asarray(tau, dtype=float) * 2 * np.pi / (n_fft * t_s)


def lambda_to_tau(lam, n_fft, t_s=1.0):
    return -np.asarray(lam, dtype=float) * n_fft * t_s / (2 * np.pi)


def steering_matrix(lam, support: ThresholdedSupport):
    """L x M matrix with entry (l, k) = exp(j lambda_k q_l)."""
    if support.size < 1:
        raise DomainError('steering matrix needs a nonempty support')
    return np.exp(1j * np.outer(support.indices, np.atleast_1d(lam)))


def subspace_lambdas(support: ThresholdedSupport, num_paths):
    """
    Matrix-pencil estimate of the phase rates of ``num_paths`` paths.

    On the longest run of consecutive support bins, r~/s~ is a sum of complex exponentials
    exp(j lambda_k q). Its Hankel matrix has a signal subspace whose shift-invariance
    gives exp(j lambda_k) as eigenvalues. Exact for a noiseless record.
    Returns None when the run is too short for ``num_paths`` exponentials.
    """
    if support.r_tilde is None:
        raise DomainError('support carries no received spectrum')

    runs = np.split(np.arange(support.size), np.flatnonzero(np.diff(support.indices) != 1) + 1)
    run = max(runs, key=len)
    h = support.r_tilde[run] / support.s_diag[run]

    length = h.size
    rows = length - length // 2
    if rows < num_paths + 1 or length // 2 + 1 < num_paths:
        return None

    Y = scipy.linalg.hankel(h[:rows], h[rows - 1:])
    U, _, _ = scipy.linalg.svd(Y, full_matrices=False)
    signal = U[:, :num_paths]
    rotation, *_ = scipy.linalg.lstsq(signal[:-1], signal[1:])

    return np.angle(scipy.linalg.eigvals(rotation))


def build_p(support: ThresholdedSupport, A):
    """p~ = S A, i.e. row l of A scaled by S[q_l]."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != support.size:
        raise DomainError(f'steering matrix of shape {A.shape} does not match a support of {support.size} bins')
    return support.s_diag[:, np.newaxis] * A
