"""Deterministic synthetic sounds for desk-scale measurements and tests."""

import numpy as np
from scipy.signal import lfilter

from src.models import Signal

# (center Hz, bandwidth Hz) of a neutral vowel
FORMANTS = ((500.0, 80.0), (1500.0, 120.0), (2500.0, 160.0))


def _resonator(center: float, bandwidth: float, sample_rate: int) -> tuple[list, list]:
    r = np.exp(-np.pi * bandwidth / sample_rate)
    theta = 2 * np.pi * center / sample_rate
    return [1 - r], [1.0, -2 * r * np.cos(theta), r * r]


def speech_like(duration: float = 1.0, sample_rate: int = 16000, seed: int = 0) -> Signal:
    """Gliding-pitch pulse train through vowel formants, gated into syllables with gaps."""
    rng = np.random.default_rng(seed)
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    f0 = 120.0 + 40.0 * np.sin(2 * np.pi * 1.3 * t) + rng.normal(0, 1.0, n).cumsum() / n
    phase = np.cumsum(f0 / sample_rate)
    excitation = np.diff(np.floor(phase), prepend=0.0)

    voiced = excitation
    for center, bandwidth in FORMANTS:
        b, a = _resonator(center, bandwidth, sample_rate)
        voiced = voiced + lfilter(b, a, excitation)

    syllables = np.clip(np.sin(2 * np.pi * 3.0 * t), 0.0, None) ** 2
    samples = voiced * syllables
    peak = np.max(np.abs(samples))
    if peak > 0:
        samples = 0.5 * samples / peak
    return Signal(samples, sample_rate, origin_tag="speech-like")


def sinusoid(
    length: int, bin_index: int, sample_rate: int = 16000, amplitude: float = 0.5
) -> Signal:
    """Cosine exactly on DFT bin `bin_index`; every other bin is zero up to rounding."""
    n = np.arange(length)
    samples = amplitude * np.cos(2 * np.pi * bin_index * n / length)
    return Signal(samples, sample_rate, f"sinusoid:{bin_index}")


def sparse_spectrum(
    length: int, bins: tuple[int, ...] = (3, 7, 19), sample_rate: int = 16000
) -> Signal:
    """A few on-bin cosines: a stimulus whose other bins sit at rounding level (< 1e-6 of peak)."""
    n = np.arange(length)
    samples = sum(np.cos(2 * np.pi * k * n / length + 0.3 * k) for k in bins)
    samples = 0.5 * samples / np.max(np.abs(samples))
    return Signal(samples, sample_rate, origin_tag="sparse")


def silence(length: int, sample_rate: int = 16000) -> Signal:
    return Signal(np.zeros(length), sample_rate, origin_tag="silence")


def random_taps(n_taps: int, seed: int = 0, decay: float = 0.5) -> np.ndarray:
    """Exponentially decaying random FIR channel with a unit first tap."""
    rng = np.random.default_rng(seed)
    taps = rng.normal(0.0, 1.0, n_taps) * decay ** np.arange(n_taps)
    taps[0] = 1.0
    return taps


GENERATORS = {
    "speech": lambda length, rate, seed: speech_like(length / rate, rate, seed),
    "sparse": lambda length, rate, seed: sparse_spectrum(length, sample_rate=rate),
    "silence": lambda length, rate, seed: silence(length, rate),
}
