import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import (
    DimensionError,
    InvalidSignalError,
    ParameterError,
    SymmetryError,
    UnsafeguardedDenominatorError,
)
from src.models import Signal, Spectrum
from src.spectral import (
    circular_convolve,
    enforce_hermitian,
    forward,
    hadamard_div,
    hadamard_mul,
    half_spectrum_freqs,
    inverse,
    mirror,
    transfer_function,
)
from tests.helpers import circular_convolve_loop, dft_matrix, make_signal


def spec(values, rate: int = 8, hermitian: bool = False) -> Spectrum:
    return Spectrum(np.asarray(values, dtype=complex), rate, hermitian)


# forward / inverse
def test_impulse_has_flat_unitary_spectrum():
    spectrum = forward(make_signal([1.0, 0.0, 0.0, 0.0]))
    np.testing.assert_allclose(spectrum.bins, np.full(4, 0.5 + 0j), atol=1e-15)


def test_constant_spectrum_inverts_to_scaled_impulse():
    signal = inverse(spec([0.1] * 4, hermitian=True))
    np.testing.assert_allclose(signal.samples, [0.2, 0.0, 0.0, 0.0], atol=1e-15)


def test_round_trip_length_16(rng):
    x = make_signal(rng.normal(size=16))
    np.testing.assert_allclose(inverse(forward(x)).samples, x.samples, rtol=0, atol=1e-10)


@settings(max_examples=200, deadline=None)
@given(length=st.integers(2, 4096), seed=st.integers(0, 2**32 - 1))
def test_parseval_and_round_trip(length, seed):
    x = np.random.default_rng(seed).normal(size=length)
    spectrum = forward(make_signal(x))
    energy = np.sum(x**2)
    assert abs(np.sum(np.abs(spectrum.bins) ** 2) - energy) <= 1e-10 * energy
    back = inverse(spectrum).samples
    assert np.linalg.norm(back - x) <= 1e-10 * np.linalg.norm(x)


@pytest.mark.parametrize("length", [2, 3, 5, 8, 17, 32])
def test_forward_matches_dft_matrix(rng, length):
    x = rng.normal(size=length)
    np.testing.assert_allclose(forward(make_signal(x)).bins, dft_matrix(length) @ x, atol=1e-9)


@pytest.mark.parametrize("length", [2, 7, 10])
def test_forward_is_exactly_hermitian(rng, length):
    bins = forward(make_signal(rng.normal(size=length))).bins
    assert np.array_equal(bins, np.conj(mirror(bins)))


def test_non_finite_sample_rejected():
    with pytest.raises(InvalidSignalError):
        Signal(np.array([0.0, np.nan, 1.0]), 8)


def test_short_signal_rejected():
    with pytest.raises(InvalidSignalError):
        Signal(np.array([1.0]), 8)


def test_inverse_refuses_asymmetric_spectrum_flagged_hermitian():
    with pytest.raises(SymmetryError):
        inverse(spec([1, 1j, 0, 0], hermitian=True))


# Hadamard arithmetic
def test_hadamard_mul_examples():
    np.testing.assert_array_equal(hadamard_mul(spec([1, 2]), spec([3, 4])).bins, [3, 8])
    a = spec([1 + 2j, -3j, 0.5])
    np.testing.assert_array_equal(hadamard_mul(a, spec([1, 1, 1])).bins, a.bins)


def test_hadamard_mul_matches_loop(rng):
    a = rng.normal(size=8) + 1j * rng.normal(size=8)
    b = rng.normal(size=8) + 1j * rng.normal(size=8)
    product = hadamard_mul(spec(a), spec(b)).bins
    for m in range(8):
        assert abs(product[m] - a[m] * b[m]) < 1e-12


def test_hadamard_length_mismatch():
    with pytest.raises(DimensionError):
        hadamard_mul(spec([1, 2]), spec([1, 2, 3]))
    with pytest.raises(DimensionError):
        hadamard_div(spec([1, 2]), spec([1, 2], rate=16), 0.0)


def test_hadamard_div_example():
    np.testing.assert_allclose(hadamard_div(spec([4, 9]), spec([2, 3]), 1.0).bins, [2, 3])


def test_hadamard_div_names_zero_bin():
    with pytest.raises(UnsafeguardedDenominatorError) as exc_info:
        hadamard_div(spec([1, 1, 1]), spec([1, 0, 2]), 1e-12)
    assert exc_info.value.bin_index == 1
    assert exc_info.value.exit_code == 3


def test_hadamard_div_zero_bin_refused_even_without_guard():
    with pytest.raises(UnsafeguardedDenominatorError):
        hadamard_div(spec([1, 1]), spec([1, 0]), 0.0)


def test_hadamard_div_negative_min_mag():
    with pytest.raises(ParameterError):
        hadamard_div(spec([1]), spec([1]), -1.0)


def test_hadamard_div_matches_loop(rng):
    num = rng.normal(size=8) + 1j * rng.normal(size=8)
    phase = np.exp(1j * rng.uniform(-np.pi, np.pi, 8))
    den = rng.uniform(0.1, 2.0, 8) * phase
    quotient = hadamard_div(spec(num), spec(den), 0.1).bins
    for m in range(8):
        assert abs(quotient[m] - num[m] / den[m]) < 1e-12


def test_div_undoes_mul(rng):
    length = 64
    h = transfer_function(rng.normal(size=5), length, 8)
    x = forward(make_signal(rng.normal(size=length), 8))
    peak = x.magnitude().max()
    x = Spectrum(np.where(x.magnitude() < 0.01 * peak, 0.01 * peak, x.bins), 8)
    recovered = hadamard_div(hadamard_mul(h, x), x, 0.005 * peak)
    np.testing.assert_allclose(recovered.bins, h.bins, atol=1e-9)


# Hermitian enforcement
def test_enforce_hermitian_example():
    result = enforce_hermitian(spec([1 + 1j, 2 + 2j, 3 + 3j, 9 + 9j]))
    np.testing.assert_array_equal(result.bins, [1, 2 + 2j, 3, 2 - 2j])
    assert result.hermitian


def test_enforce_hermitian_keeps_hermitian_spectrum(rng):
    bins = forward(make_signal(rng.normal(size=9))).bins
    np.testing.assert_array_equal(enforce_hermitian(spec(bins)).bins, bins)


def test_enforce_hermitian_inverts_to_real(rng):
    bins = rng.normal(size=8) + 1j * rng.normal(size=8)
    x = np.fft.ifft(enforce_hermitian(spec(bins)).bins, norm="ortho")
    assert np.sqrt(np.mean(x.imag**2)) < 1e-12


# Convolution model
def test_circular_convolution_matches_loop(rng):
    x = rng.normal(size=8)
    h = rng.normal(size=3)
    y = circular_convolve(make_signal(x), h).samples
    np.testing.assert_allclose(y, circular_convolve_loop(x, h), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(length=st.integers(4, 64), n_h=st.integers(1, 4), seed=st.integers(0, 2**16))
def test_circular_convolution_equivalence(length, n_h, seed):
    r = np.random.default_rng(seed)
    x, h = r.normal(size=length), r.normal(size=n_h)
    y = circular_convolve(make_signal(x), h).samples
    np.testing.assert_allclose(y, circular_convolve_loop(x, h), atol=1e-9)


def test_transfer_function_too_long():
    with pytest.raises(DimensionError):
        transfer_function(np.ones(5), 4, 8)


def test_half_spectrum_freqs_cover_nyquist():
    np.testing.assert_array_equal(half_spectrum_freqs(4, 8), [0.0, 2.0, 4.0])
    assert half_spectrum_freqs(5, 10).size == 3
