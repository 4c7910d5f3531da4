import  numpy as np
import  pytest

from    multipathga import error_fn, spectral
from    multipathga.error import ConditioningError, DomainError
from    multipathga.error_fn import ParamVector
from    multipathga.signal_synth import MultipathChannel, apply_channel
from    multipathga.spectral import Spectrum, ThresholdedSupport


@pytest.fixture(autouse=True)
def setup(three_path):
    """ setup any state specific to the execution of the given module."""
    global real_truth, off_truth
    real_truth = ParamVector(np.real(three_path.truth.amplitudes), three_path.truth.delays)
    off_truth = ParamVector(np.array([0.9, -0.5, 0.3]), np.array([198.0, 210.0, 225.0]))
    yield


def _local_minima(values):
    return [i for i in range(1, len(values) - 1) if values[i] < values[i - 1] and values[i] < values[i + 1]]


def test_param_vector_validation():
    with pytest.raises(DomainError):
        ParamVector([1.0, 2.0], [3.0])
    with pytest.raises(DomainError):
        ParamVector([], [])
    with pytest.raises(DomainError):
        ParamVector([np.nan], [1.0])

    assert ParamVector(1.0, 2.0).num_paths == 1


def test_signed_frequencies():
    assert error_fn.signed_frequencies(8).tolist() == [0, 1, 2, 3, -4, -3, -2, -1]


def test_error_functions_vanish_at_truth(three_path):
    scale = three_path.support.received_energy

    assert error_fn.raef(three_path.R, three_path.S, real_truth) < 1e-18 * scale * 1000
    assert error_fn.caef_full(three_path.R, three_path.S, three_path.truth) < 1e-18 * scale * 1000
    assert error_fn.caef_thresholded(three_path.support, three_path.truth) < 1e-18 * scale * 1000


def test_error_functions_are_positive_off_truth(three_path):
    assert error_fn.raef(three_path.R, three_path.S, off_truth) > 0
    assert error_fn.caef_full(three_path.R, three_path.S, off_truth) > 0
    assert error_fn.caef_thresholded(three_path.support, off_truth) > 0


def test_raef_rejects_complex_amplitudes(three_path):
    with pytest.raises(DomainError):
        error_fn.raef(three_path.R, three_path.S, ParamVector(np.array([1 + 1j]), np.array([200.0])))

    # a complex dtype with zero imaginary parts is still a real amplitude vector
    assert error_fn.raef(three_path.R, three_path.S, three_path.truth) == pytest.approx(
        error_fn.raef(three_path.R, three_path.S, real_truth))


def test_mismatched_spectra(three_path):
    with pytest.raises(DomainError):
        error_fn.raef(three_path.R, Spectrum(three_path.S.bins[:500]), real_truth)


def test_raef_folds_onto_positive_half(three_path):
    """Real amplitudes make the residual conjugate-symmetric, so the full sum is twice the half sum
    with bin 0 counted once and the Nyquist bin added back."""
    residual = error_fn.bin_residuals(three_path.R, three_path.S, off_truth)
    half = three_path.R.n_fft // 2

    expected = (2 * error_fn.caef_full(three_path.R, three_path.S, off_truth)
                - abs(residual[0]) ** 2 + abs(residual[half]) ** 2)
    assert error_fn.raef(three_path.R, three_path.S, off_truth) == pytest.approx(expected, rel=1e-10)


def test_raef_matches_time_domain_residual(three_path):
    model = apply_channel(three_path.pulse, MultipathChannel(off_truth.amplitudes, off_truth.delays), 1000)
    time_domain = 1000 * np.sum((three_path.received.samples - model.samples) ** 2)

    assert error_fn.raef(three_path.R, three_path.S, off_truth) == pytest.approx(time_domain, rel=1e-9)


def test_thresholded_form_over_whole_half_equals_caef_full(three_path):
    support = _whole_half(three_path)

    for p in (off_truth, ParamVector(np.array([0.5 - 0.2j]), np.array([207.3]))):
        assert error_fn.caef_thresholded(support, p) == pytest.approx(
            error_fn.caef_full(three_path.R, three_path.S, p), rel=1e-10)


def test_thresholded_needs_received_spectrum(three_path):
    bare = spectral.select_support(three_path.S, 0.1)

    with pytest.raises(DomainError):
        error_fn.caef_thresholded(bare, real_truth)


def test_delay_slice_oscillates(three_path):
    grid = np.arange(180.0, 220.0 + 0.125, 0.25)
    values = [error_fn.caef_thresholded(three_path.support,
                                        ParamVector(real_truth.amplitudes, np.array([tau, 204.0, 220.0])))
              for tau in grid]

    assert grid[int(np.argmin(values))] == 200.0
    assert len(_local_minima(values)) >= 3


def test_amplitude_slice_is_quadratic(three_path):
    grid = np.linspace(-1.5, 0.0, 61)
    values = [error_fn.caef_thresholded(three_path.support,
                                        ParamVector(np.array([1.0, a, 0.4]), real_truth.delays))
              for a in grid]

    assert error_fn.parabola_vertex(grid, values) == pytest.approx(-0.8, abs=1e-6)


def test_parabola_vertex_needs_a_minimum():
    with pytest.raises(DomainError):
        error_fn.parabola_vertex([0, 1, 2, 3], [0, -1, -4, -9])


def test_ls_amplitudes_recover_truth(three_path):
    lam = spectral.tau_to_lambda(three_path.truth.delays, 1000)
    amplitudes = error_fn.ls_amplitudes(three_path.support, lam)

    assert np.allclose(amplitudes, [1.0, -0.8, 0.4], atol=1e-8)
    assert error_fn.imaginary_fraction(amplitudes) < 1e-8


def test_ls_amplitudes_are_optimal(three_path):
    delays = np.array([199.0, 206.0, 221.0])
    lam = spectral.tau_to_lambda(delays, 1000)
    best = error_fn.ls_amplitudes(three_path.support, lam)
    floor = error_fn.caef_thresholded(three_path.support, ParamVector(best, delays))

    rng = np.random.default_rng(2024)
    for _ in range(1000):
        nudged = best + 0.1 * (rng.standard_normal(3) + 1j * rng.standard_normal(3))
        assert error_fn.caef_thresholded(three_path.support, ParamVector(nudged, delays)) >= floor


def test_ls_residual_is_orthogonal(three_path):
    lam = spectral.tau_to_lambda([199.0, 206.0, 221.0], 1000)
    P = error_fn.projection(three_path.support, lam)
    residual = three_path.support.r_tilde - P @ error_fn.ls_amplitudes(three_path.support, lam)

    assert np.linalg.norm(P.conj().T @ residual) < 1e-8 * np.linalg.norm(P) * np.linalg.norm(three_path.support.r_tilde)


def test_duplicate_delays_are_rank_deficient(three_path):
    lam = spectral.tau_to_lambda([200.0, 200.0], 1000)

    with pytest.raises(ConditioningError) as info:
        error_fn.ls_amplitudes(three_path.support, lam)

    assert info.value.condition > error_fn.MAX_CONDITION
    assert info.value.exit_code == 3


def test_more_paths_than_bins(three_path):
    single = ThresholdedSupport(indices=np.array([120]),
                                threshold=0.0,
                                s_diag=three_path.S.bins[[120]],
                                r_tilde=three_path.R.bins[[120]],
                                n_fft=1000)

    with pytest.raises(ConditioningError):
        error_fn.ls_amplitudes(single, spectral.tau_to_lambda([200.0, 230.0], 1000))


def test_imaginary_fraction():
    assert error_fn.imaginary_fraction([3 + 4j]) == pytest.approx(0.8)
    assert error_fn.imaginary_fraction([1.0, -2.0]) == 0.0
    assert error_fn.imaginary_fraction([0j, 0j]) == 0.0


def _whole_half(three_path):
    half = np.arange(500)
    return ThresholdedSupport(indices=half,
                              threshold=0.0,
                              s_diag=three_path.S.bins[half],
                              r_tilde=three_path.R.bins[half],
                              n_fft=1000)


def _random_points(rng, count, max_delay, integer=False):
    for _ in range(count):
        paths = int(rng.integers(1, 5))
        delays = rng.integers(0, max_delay + 1, paths) if integer else rng.uniform(0.0, max_delay, paths)
        yield ParamVector(rng.uniform(-1.5, 1.5, paths), delays.astype(float))


def test_parseval_and_threshold_limit_on_random_points(three_path):
    rng = np.random.default_rng(31)
    whole_half = _whole_half(three_path)

    for p in _random_points(rng, 100, 250, integer=True):
        model = apply_channel(three_path.pulse, MultipathChannel(p.amplitudes, p.delays), 1000)
        time_domain = 1000 * np.sum((three_path.received.samples - model.samples) ** 2)

        assert error_fn.raef(three_path.R, three_path.S, p) == pytest.approx(time_domain, rel=1e-9)
        assert error_fn.caef_thresholded(whole_half, p) == pytest.approx(
            error_fn.caef_full(three_path.R, three_path.S, p), rel=1e-9)


def test_error_functions_repeat_after_one_period(three_path):
    rng = np.random.default_rng(32)

    for p in _random_points(rng, 100, 1000.0):
        for k in range(p.num_paths):
            shifted = p.delays.copy()
            shifted[k] += 1000.0
            q = ParamVector(p.amplitudes, shifted)

            assert error_fn.raef(three_path.R, three_path.S, q) == pytest.approx(
                error_fn.raef(three_path.R, three_path.S, p), rel=1e-9)
            assert error_fn.caef_full(three_path.R, three_path.S, q) == pytest.approx(
                error_fn.caef_full(three_path.R, three_path.S, p), rel=1e-9)
            assert error_fn.caef_thresholded(three_path.support, q) == pytest.approx(
                error_fn.caef_thresholded(three_path.support, p), rel=1e-9)


def test_real_ls_amplitudes(three_path):
    lam = spectral.tau_to_lambda(three_path.truth.delays, 1000)
    amplitudes = error_fn.ls_amplitudes(three_path.support, lam, real=True)

    assert np.isrealobj(amplitudes) is True
    assert np.allclose(amplitudes, [1.0, -0.8, 0.4], atol=1e-8)

    # the real optimum can only be worse than the complex one away from the truth
    lam = spectral.tau_to_lambda([199.0, 206.0, 221.0], 1000)
    real = error_fn.ls_amplitudes(three_path.support, lam, real=True)
    free = error_fn.ls_amplitudes(three_path.support, lam)
    delays = np.array([199.0, 206.0, 221.0])
    floor = error_fn.caef_thresholded(three_path.support, ParamVector(real, delays))

    assert floor >= error_fn.caef_thresholded(three_path.support, ParamVector(free, delays))
    rng = np.random.default_rng(7)
    for _ in range(200):
        nudged = real + 0.05 * rng.standard_normal(3)
        assert error_fn.caef_thresholded(three_path.support, ParamVector(nudged, delays)) >= floor


def test_real_ls_amplitudes_reject_duplicate_delays(three_path):
    with pytest.raises(ConditioningError):
        error_fn.ls_amplitudes(three_path.support, spectral.tau_to_lambda([200.0, 200.0], 1000), real=True)
