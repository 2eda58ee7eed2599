"""Unitary DFT contract and elementwise spectral arithmetic.

Every stored `Spectrum` uses the 1/sqrt(L) convention, so ``sum|x|^2 == sum|X|^2``.
numpy's ``norm="ortho"`` is exactly that scaling, for any L.
"""

import numpy as np

from src.errors import (
    DimensionError,
    ParameterError,
    SymmetryError,
    UnsafeguardedDenominatorError,
)
from src.models import Signal, Spectrum

# Imaginary residue allowed on the inverse of a hermitian spectrum, relative to frame RMS
IMAG_RESIDUE_TOL = 1e-10


def _hermitian_tolerance(bins: np.ndarray) -> float:
    return 1e-12 * max(1.0, float(np.max(np.abs(bins))))


def mirror(bins: np.ndarray) -> np.ndarray:
    """bins[L - m mod L] for every m."""
    return np.roll(bins[::-1], 1)


def forward(signal: Signal) -> Spectrum:
    # Built from the half spectrum so the result is exactly conjugate-symmetric
    length = len(signal)
    half = np.fft.rfft(signal.samples, norm="ortho")
    bins = np.empty(length, dtype=np.complex128)
    bins[: half.size] = half
    bins[half.size :] = np.conj(half[1 : (length + 1) // 2][::-1])
    return Spectrum(bins, signal.sample_rate, hermitian=True)


def inverse(spectrum: Spectrum, origin_tag: str = "") -> Signal:
    bins = spectrum.bins
    if spectrum.hermitian:
        asymmetry = np.max(np.abs(bins - np.conj(mirror(bins))))
        if asymmetry > _hermitian_tolerance(bins):
            raise SymmetryError(f"Spectrum flagged hermitian deviates by {asymmetry:.3e}")
    x = np.fft.ifft(bins, norm="ortho")
    if spectrum.hermitian:
        rms = np.sqrt(np.mean(np.abs(x) ** 2))
        residue = np.sqrt(np.mean(x.imag**2))
        if residue > IMAG_RESIDUE_TOL * max(rms, np.finfo(float).tiny):
            raise SymmetryError(f"Inverse has imaginary residue {residue:.3e} (rms {rms:.3e})")
    return Signal(x.real, spectrum.sample_rate, origin_tag)


def _check_compatible(a: Spectrum, b: Spectrum) -> None:
    if len(a) != len(b):
        raise DimensionError(f"Spectrum lengths differ: {len(a)} != {len(b)}")
    if a.sample_rate != b.sample_rate:
        raise DimensionError(f"Sample rates differ: {a.sample_rate} != {b.sample_rate}")


def hadamard_mul(a: Spectrum, b: Spectrum) -> Spectrum:
    _check_compatible(a, b)
    return Spectrum(a.bins * b.bins, a.sample_rate, hermitian=a.hermitian and b.hermitian)


def hadamard_div(num: Spectrum, den: Spectrum, min_mag: float) -> Spectrum:
    """Elementwise num / den. Refuses any denominator bin with magnitude below `min_mag`."""
    _check_compatible(num, den)
    if min_mag < 0:
        raise ParameterError(f"min_mag must be >= 0, got {min_mag}")
    mags = den.magnitude()
    weak = np.flatnonzero(mags < min_mag)
    if weak.size:
        worst = int(weak[np.argmin(mags[weak])])
        raise UnsafeguardedDenominatorError(worst, float(mags[worst]), min_mag)
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = num.bins / den.bins
    zero = np.flatnonzero(mags == 0)
    if zero.size:
        raise UnsafeguardedDenominatorError(int(zero[0]), 0.0, min_mag)
    return Spectrum(quotient, num.sample_rate, hermitian=num.hermitian and den.hermitian)


def enforce_hermitian(spectrum: Spectrum) -> Spectrum:
    """Mirror bins 1..ceil(L/2)-1 onto the upper half; DC and Nyquist (even L) made real."""
    length = len(spectrum)
    bins = spectrum.bins.copy()
    bins[0] = bins[0].real
    if length % 2 == 0:
        bins[length // 2] = bins[length // 2].real
    lower = np.arange(1, (length + 1) // 2)
    bins[length - lower] = np.conj(bins[lower])
    return Spectrum(bins, spectrum.sample_rate, hermitian=True)


def transfer_function(ir: np.ndarray, length: int, sample_rate: int) -> Spectrum:
    """Unnormalized DFT of an impulse response zero-extended to `length`.

    With unitary spectra, circular convolution is ``F(x ⊛ h) = sqrt(L)·(Fx)⊙(Fh)``; this is
    the sqrt(L)·Fh factor, so ``y = inverse(hadamard_mul(forward(x), H))``.
    """
    ir = np.asarray(ir, dtype=np.float64)
    if ir.size > length:
        raise DimensionError(f"Impulse response of {ir.size} taps exceeds frame length {length}")
    extended = Signal(np.pad(ir, (0, length - ir.size)), sample_rate)
    return Spectrum(forward(extended).bins * np.sqrt(length), sample_rate, hermitian=True)


def circular_convolve(signal: Signal, ir: np.ndarray) -> Signal:
    spectrum = hadamard_mul(forward(signal), transfer_function(ir, len(signal), signal.sample_rate))
    return inverse(spectrum, signal.origin_tag)


def half_spectrum_freqs(length: int, sample_rate: int) -> np.ndarray:
    """Bin frequencies 0..fs/2 (L//2 + 1 values)."""
    return np.arange(length // 2 + 1) * (sample_rate / length)
