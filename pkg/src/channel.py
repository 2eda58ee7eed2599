"""Simulated LTI channel with additive white noise.

Periodic mode models a stimulus looped P times: after the first (transient) period every
frame is the circular convolution of one stimulus frame with h. Single-shot mode plays the
stimulus once and relies on its zero-padded tail to absorb the impulse response.
"""

import logging

import numpy as np
from scipy.signal import convolve

from src.errors import ChannelTooLongError, InsufficientPaddingError, ParameterError
from src.models import (
    ChannelModel,
    MeasurementMode,
    NoiseKind,
    Recording,
    SafeguardedSignal,
    Signal,
)
from src.spectral import circular_convolve

logger = logging.getLogger(__name__)


def _excitation(stimulus: SafeguardedSignal | Signal) -> Signal:
    return stimulus.stimulus if isinstance(stimulus, SafeguardedSignal) else stimulus


def trailing_zeros(samples: np.ndarray) -> int:
    nonzero = np.flatnonzero(samples)
    return samples.size if nonzero.size == 0 else samples.size - 1 - int(nonzero[-1])


def noise_sigma(channel: ChannelModel, reference_rms: float | None = None) -> float:
    """Per-sample noise standard deviation; SNR mode needs the noiseless output RMS."""
    if channel.noise_kind == NoiseKind.none:
        return 0.0
    if channel.noise_sigma is not None:
        return channel.noise_sigma
    if reference_rms is None:
        raise ParameterError("SNR-specified noise needs the noiseless output RMS")
    return reference_rms * 10.0 ** (-channel.snr_db / 20.0)


def noise_realization(
    length: int,
    channel: ChannelModel,
    frame_index: int,
    reference_rms: float | None = None,
) -> Signal:
    """Noise for one frame; a pure function of (channel.seed, frame_index)."""
    sigma = noise_sigma(channel, reference_rms)
    if sigma == 0.0:
        return Signal(np.zeros(length), channel.sample_rate, "noise:none")
    rng = np.random.default_rng([channel.seed, frame_index])
    return Signal(
        rng.normal(0.0, sigma, size=length), channel.sample_rate, f"noise:{frame_index}"
    )


def _observe(
    clean: np.ndarray,
    channel: ChannelModel,
    frame_indices: range,
    retain_noise: bool,
) -> tuple[tuple[Signal, ...], tuple[np.ndarray, ...] | None]:
    reference_rms = float(np.sqrt(np.mean(clean**2)))
    frames, noises = [], []
    for index in frame_indices:
        noise = noise_realization(clean.size, channel, index, reference_rms).samples
        frames.append(Signal(clean + noise, channel.sample_rate, f"frame:{index}"))
        noises.append(noise)
    return tuple(frames), (tuple(noises) if retain_noise else None)


def noiseless_output(
    excitation: Signal, channel: ChannelModel, mode: MeasurementMode
) -> np.ndarray:
    """Channel output without noise: circular (periodic) or truncated linear (single-shot)."""
    if mode == MeasurementMode.periodic:
        return circular_convolve(excitation, channel.ir).samples
    return linear_convolve_truncated(excitation.samples, channel.ir)


def simulate_periodic(
    stimulus: SafeguardedSignal | Signal,
    channel: ChannelModel,
    periods: int,
    *,
    retain_noise: bool = False,
) -> Recording:
    """Loop the stimulus `periods` times through the channel; keep periods 2..P."""
    excitation = _excitation(stimulus)
    frame_length = len(excitation)
    if periods < 2:
        raise ParameterError(f"Periodic mode needs at least 2 periods, got {periods}")
    if channel.n_h > frame_length:
        raise ChannelTooLongError(
            f"Impulse response of {channel.n_h} taps exceeds frame length {frame_length}"
        )
    clean = noiseless_output(excitation, channel, MeasurementMode.periodic)
    frames, noises = _observe(clean, channel, range(1, periods), retain_noise)
    logger.debug("Simulated %d steady-state frames of %d samples", len(frames), frame_length)
    return Recording(
        frames=frames,
        mode=MeasurementMode.periodic,
        channel_digest=channel.digest,
        periods=periods,
        noise=noises,
    )


def simulate_single_shot(
    stimulus: SafeguardedSignal | Signal,
    channel: ChannelModel,
    *,
    retain_noise: bool = False,
) -> Recording:
    """Play the stimulus once: linear convolution truncated to the frame, one noise draw.

    A bare `Signal` is treated as padded by its run of trailing zeros.
    """
    excitation = _excitation(stimulus)
    if isinstance(stimulus, SafeguardedSignal):
        pad_len = stimulus.pad_len
    else:
        pad_len = trailing_zeros(excitation.samples)
    if channel.n_h > pad_len + 1:
        raise InsufficientPaddingError(
            f"Impulse response of {channel.n_h} taps needs pad_len >= {channel.n_h - 1}, "
            f"stimulus has {pad_len}"
        )
    clean = noiseless_output(excitation, channel, MeasurementMode.single_shot)
    frames, noises = _observe(clean, channel, range(1), retain_noise)
    return Recording(
        frames=frames,
        mode=MeasurementMode.single_shot,
        channel_digest=channel.digest,
        periods=1,
        noise=noises,
    )


def linear_convolve_truncated(samples: np.ndarray, ir: np.ndarray) -> np.ndarray:
    """First len(samples) samples of the full linear convolution."""
    return convolve(samples, ir, mode="full", method="auto")[: samples.size]
