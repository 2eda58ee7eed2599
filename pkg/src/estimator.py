"""Impulse response estimation by spectral division.

h_est = F^H(S ⊘ X) / sqrt(L). Splitting S = Y + R shows h_est = h + F^H(R ⊘ X) / sqrt(L):
the noise term is bounded only because every |X[m]| is at least the safeguarding floor.
"""

import logging

import numpy as np

from src.errors import DimensionError, EmptyRecordingError, ParameterError
from src.models import (
    MeasurementMode,
    MeasurementResult,
    Recording,
    SafeguardedSignal,
    Signal,
    TrimmedIR,
)
from src.spectral import forward, hadamard_div, inverse

logger = logging.getLogger(__name__)


def default_min_mag(stimulus: SafeguardedSignal) -> float:
    return 0.5 * stimulus.min_floor


def zero_extend(ir: np.ndarray, length: int) -> np.ndarray:
    ir = np.asarray(ir, dtype=np.float64)
    if ir.size > length:
        raise DimensionError(f"Impulse response of {ir.size} taps exceeds frame length {length}")
    return np.pad(ir, (0, length - ir.size))


def average_frames(recording: Recording) -> Signal:
    """Synchronous average. Averaging frames equals averaging their spectra (DFT is linear)."""
    if not recording.frames:
        raise EmptyRecordingError("Recording has no frames to average")
    if len(recording.frames) == 1:
        return recording.frames[0]
    stacked = np.stack([frame.samples for frame in recording.frames])
    first = recording.frames[0]
    return Signal(stacked.mean(axis=0), first.sample_rate, f"average:{len(recording.frames)}")


def deconvolve(observed: Signal, excitation: Signal, min_mag: float) -> Signal:
    if len(observed) != len(excitation):
        raise DimensionError(
            f"Observed frame has {len(observed)} samples, excitation has {len(excitation)}"
        )
    quotient = hadamard_div(forward(observed), forward(excitation), min_mag)
    h = inverse(quotient, origin_tag="h_est")
    return Signal(h.samples / np.sqrt(len(h)), h.sample_rate, h.origin_tag)


def estimate_ir(
    observed: Signal,
    stimulus: SafeguardedSignal,
    *,
    min_mag: float | None = None,
    ground_truth: np.ndarray | None = None,
    averaged_frames: int = 1,
    mode: MeasurementMode = MeasurementMode.periodic,
) -> MeasurementResult:
    """Deconvolve `observed` by the stimulus; refuse bins below half the minimum floor.

    `ground_truth` (the channel IR, any length up to L') adds a residual h_est - h.
    """
    if min_mag is None:
        min_mag = default_min_mag(stimulus)
    h_est = deconvolve(observed, stimulus.stimulus, min_mag)
    residual = None
    if ground_truth is not None:
        truth = zero_extend(ground_truth, len(h_est))
        residual = Signal(h_est.samples - truth, h_est.sample_rate, "residual")
    return MeasurementResult(
        h_est=h_est,
        averaged_frames=averaged_frames,
        mode=mode,
        stimulus_digest=stimulus.digest,
        residual=residual,
    )


def measure(
    recording: Recording,
    stimulus: SafeguardedSignal,
    *,
    ground_truth: np.ndarray | None = None,
    min_mag: float | None = None,
) -> MeasurementResult:
    observed = average_frames(recording)
    result = estimate_ir(
        observed,
        stimulus,
        min_mag=min_mag,
        ground_truth=ground_truth,
        averaged_frames=len(recording.frames),
        mode=recording.mode,
    )
    logger.info(
        "Estimated %d-tap IR from %d %s frame(s)",
        len(result.h_est),
        result.averaged_frames,
        result.mode.value,
    )
    return result


def error_term(
    noise: Signal, stimulus: SafeguardedSignal, *, min_mag: float | None = None
) -> Signal:
    """Contribution of observation noise to h_est: F^H(R ⊘ X) / sqrt(L)."""
    if min_mag is None:
        min_mag = default_min_mag(stimulus)
    return deconvolve(noise, stimulus.stimulus, min_mag)


def trim_ir(result: MeasurementResult, n_keep: int) -> TrimmedIR:
    samples = result.h_est.samples
    if not 0 < n_keep <= samples.size:
        raise ParameterError(f"n_keep must be in [1, {samples.size}], got {n_keep}")
    total = float(np.sum(samples**2))
    tail = float(np.sum(samples[n_keep:] ** 2))
    return TrimmedIR(taps=samples[:n_keep].copy(), tail_ratio=tail / total if total > 0 else 0.0)
