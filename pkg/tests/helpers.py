import numpy as np

from src.models import Signal

RATE = 16000


def make_signal(samples, sample_rate: int = RATE, tag: str = "test") -> Signal:
    return Signal(np.asarray(samples, dtype=np.float64), sample_rate, tag)


def circular_convolve_loop(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """O(L * n_h) reference circular convolution."""
    length = x.size
    y = np.zeros(length)
    for n in range(length):
        for k in range(h.size):
            y[n] += h[k] * x[(n - k) % length]
    return y


def linear_convolve_loop(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    y = np.zeros(x.size + h.size - 1)
    for n in range(x.size):
        y[n : n + h.size] += x[n] * h
    return y


def dft_matrix(length: int) -> np.ndarray:
    p, q = np.meshgrid(np.arange(length), np.arange(length), indexing="ij")
    return np.exp(-2j * np.pi * p * q / length) / np.sqrt(length)
