"""
Frequency-domain least-squares error functions for the multipath model.

``raef`` sums over every bin and only accepts real amplitudes. ``caef_full`` sums
over the positive half and accepts complex amplitudes. ``caef_thresholded`` sums
over the thresholded support through the p~(lambda) = S A(lambda) matrix form.
The full-spectrum functions use direct per-path summation and never touch the
matrix form, so each family can be checked against the other.
"""
from    dataclasses import dataclass
import  logging

import  numpy as np
import  scipy.linalg

from    multipathga.error import ConditioningError, DomainError
from    multipathga import spectral
from    multipathga.spectral import Spectrum, ThresholdedSupport

logger = logging.getLogger(__name__)

MAX_CONDITION = 1e10


@dataclass(frozen=True, eq=False)
class ParamVector():
    """
    A candidate (a, tau) point. Delays are in seconds.
    """
    amplitudes: np.ndarray
    delays: np.ndarray

    def __post_init__(self):
        amplitudes = np.atleast_1d(np.asarray(self.amplitudes))
        delays = np.atleast_1d(np.asarray(self.delays, dtype=float))

        if amplitudes.size != delays.size or amplitudes.size < 1:
            raise DomainError(f'expected matching nonempty amplitude/delay vectors, got {amplitudes.size} and {delays.size}')
        if not (np.all(np.isfinite(amplitudes)) and np.all(np.isfinite(delays))):
            raise DomainError('parameter vector must be finite')

        object.__setattr__(self, 'amplitudes', amplitudes)
        object.__setattr__(self, 'delays', delays)

    @property
    def num_paths(self):
        return self.delays.size

    def __repr__(self):
        return f'ParamVector(amplitudes={self.amplitudes.tolist()}, delays={self.delays.tolist()})'


def _check_pair(R: Spectrum, S: Spectrum):
    if R.n_fft != S.n_fft:
        raise DomainError(f'spectra differ in length ({R.n_fft} vs {S.n_fft})')
    if R.n_fft % 2:
        raise DomainError(f'spectra must have even length, got {R.n_fft}')


def signed_frequencies(n_fft):
    """Signed index n in [-N/2, N/2 - 1] held by each bin 0 .. N - 1."""
    bins = np.arange(n_fft)
    return np.where(bins < n_fft // 2, bins, bins - n_fft)


def bin_residuals(R: Spectrum, S: Spectrum, p: ParamVector, t_s=1.0):
    """
    R[n] - S[n] sum_k a_k exp(-j tau_k 2 pi n / (N T_s)) for every bin, negative
    frequencies wrapped to index N + n.
    """
    _check_pair(R, S)
    n = signed_frequencies(R.n_fft)

    response = np.zeros(R.n_fft, dtype=complex)
    for a_k, tau_k in zip(p.amplitudes, p.delays):
        response += a_k * np.exp(-2j * np.pi * tau_k * n / (R.n_fft * t_s))

    return R.bins - S.bins * response


def raef(R: Spectrum, S: Spectrum, p: ParamVector, t_s=1.0):
    """Real-amplitude error function, summed over the whole spectrum."""
    if np.iscomplexobj(p.amplitudes) and np.any(np.imag(p.amplitudes) != 0):
        raise DomainError('the real-amplitude error function constrains the amplitudes to be real')

    residual = bin_residuals(R, S, ParamVector(np.real(p.amplitudes), p.delays), t_s)
    return float(np.sum(np.abs(residual) ** 2))


def caef_full(R: Spectrum, S: Spectrum, p: ParamVector, t_s=1.0):
    """Complex-amplitude error function over bins 0 .. N/2 - 1."""
    residual = bin_residuals(R, S, p, t_s)[:R.n_fft // 2]
    return float(np.sum(np.abs(residual) ** 2))


def _require_received(support):
    if support.size < 1:
        raise DomainError('error function needs a nonempty support')
    if support.r_tilde is None:
        raise DomainError('support carries no received spectrum')


def projection(support: ThresholdedSupport, lam):
    return spectral.build_p(support, spectral.steering_matrix(lam, support))


def caef_thresholded(support: ThresholdedSupport, p: ParamVector, n_fft=None, t_s=None):
    """||r~ - p~(lambda) a||^2 with lambda derived from the delays of ``p``."""
    _require_received(support)
    n_fft = n_fft or support.n_fft
    t_s = support.t_s if t_s is None else t_s

    lam = spectral.tau_to_lambda(p.delays, n_fft, t_s)
    residual = support.r_tilde - projection(support, lam) @ p.amplitudes
    return float(np.vdot(residual, residual).real)


def ls_amplitudes(support: ThresholdedSupport, lam, max_condition=MAX_CONDITION, real=False):
    """
    Amplitudes minimizing ||r~ - p~(lambda) a||^2 for fixed delays.

    :param bool real: Constrain a to real values by solving the stacked system
                      [Re p~; Im p~] a = [Re r~; Im r~]. (Default: False, complex a)

    :raises ConditioningError: when p~ is rank deficient, e.g. for duplicate delays.
    """
    _require_received(support)
    P = projection(support, lam)

    L, M = P.shape
    if L < M:
        raise ConditioningError(f'{M} paths cannot be resolved from {L} bins', condition=np.inf)

    target = support.r_tilde
    if real:
        P = np.vstack([P.real, P.imag])
        target = np.concatenate([target.real, target.imag])

    singular = scipy.linalg.svdvals(P)
    condition = singular[0] / singular[-1] if singular[-1] > 0 else np.inf
    if condition > max_condition:
        raise ConditioningError(condition=condition)

    amplitudes, *_ = scipy.linalg.lstsq(P, target)
    return amplitudes


def imaginary_fraction(amplitudes):
    """||Im a|| / ||a||; zero for an all-zero vector."""
    amplitudes = np.asarray(amplitudes)
    norm = np.linalg.norm(amplitudes)
    return float(np.linalg.norm(np.imag(amplitudes)) / norm) if norm > 0 else 0.0


def parabola_vertex(x, y):
    """
    Abscissa of the parabola through the three lowest samples of a slice. E_c is exactly
    quadratic in each amplitude, so this recovers the slice minimum independently of the grid.
    """
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    lowest = np.sort(np.argsort(y)[:3])
    coefficients = np.polyfit(x[lowest], y[lowest], 2)
    if coefficients[0] <= 0:
        raise DomainError('the lowest samples do not bound a minimum')
    return float(-coefficients[1] / (2 * coefficients[0]))
