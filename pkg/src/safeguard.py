"""Threshold profiles and the safeguarding transform.

Safeguarding lifts every DFT bin whose magnitude sits below its floor up to the floor,
keeping its phase. Bins already at or above the floor are untouched, so the added
component is confined to weak bins and the deconvolution denominator never drops
below the floor.
"""

import logging
from datetime import datetime, timezone

UTC = timezone.utc

import numpy as np
from scipy.ndimage import uniform_filter1d

from src.errors import DegenerateInputError, DimensionError, FloorViolationError, ParameterError
from src.models import (
    ProfileKind,
    SafeguardedSignal,
    SdrState,
    Signal,
    Spectrum,
    ThresholdProfile,
)
from src.schemas import ProfileParams
from src.spectral import enforce_hermitian, forward, inverse

logger = logging.getLogger(__name__)

DEFAULT_WINDOW_BINS = 65
DEFAULT_REL_FLOOR_DB = -20.0
DEFAULT_ABS_FLOOR_DB = -60.0

# Magnitudes at or below this are treated as exact zeros (no phase to keep)
_ZERO_MAG = np.finfo(np.float64).tiny


def db_to_gain(level_db: float) -> float:
    return float(10.0 ** (level_db / 20.0))


def _symmetrize(floor: np.ndarray) -> np.ndarray:
    # Lower half is authoritative, as in enforce_hermitian
    length = floor.size
    out = floor.copy()
    lower = np.arange(1, (length + 1) // 2)
    out[length - lower] = out[lower]
    return out


def constant_profile(level_db_rel_peak: float, spectrum: Spectrum) -> ThresholdProfile:
    peak = float(spectrum.magnitude().max())
    if peak == 0.0:
        raise DegenerateInputError("Spectrum is all zero; a peak-relative floor is undefined")
    floor = np.full(len(spectrum), peak * db_to_gain(level_db_rel_peak))
    return ThresholdProfile(
        floor, ProfileParams(kind=ProfileKind.constant, level_db=level_db_rel_peak)
    )


def smoothed_power(spectrum: Spectrum, window_bins: int) -> np.ndarray:
    """Circular moving average of |X[m]|^2 over `window_bins` centered bins."""
    return uniform_filter1d(spectrum.magnitude() ** 2, size=window_bins, mode="wrap")


def smoothed_profile(
    spectrum: Spectrum,
    window_bins: int = DEFAULT_WINDOW_BINS,
    rel_floor_db: float = DEFAULT_REL_FLOOR_DB,
    abs_floor_db: float = DEFAULT_ABS_FLOOR_DB,
) -> ThresholdProfile:
    """Frequency-dependent floor following the smoothed spectral envelope.

    floor[m] = max(sqrt(P~[m]) * g_rel, max(sqrt(P~)) * g_abs). For an all-zero spectrum
    the absolute term references unitary full scale (1.0) instead of the missing peak.
    """
    length = len(spectrum)
    if window_bins < 1 or window_bins % 2 == 0:
        raise ParameterError(f"window_bins must be a positive odd integer, got {window_bins}")
    if window_bins > length:
        raise ParameterError(f"window_bins {window_bins} exceeds spectrum length {length}")

    envelope = np.sqrt(smoothed_power(spectrum, window_bins))
    reference = float(envelope.max())
    if reference == 0.0:
        logger.info("All-zero spectrum; absolute floor taken relative to full scale")
        reference = 1.0
    floor = np.maximum(envelope * db_to_gain(rel_floor_db), reference * db_to_gain(abs_floor_db))
    params = ProfileParams(
        kind=ProfileKind.smoothed,
        window_bins=window_bins,
        rel_floor_db=rel_floor_db,
        abs_floor_db=abs_floor_db,
    )
    return ThresholdProfile(_symmetrize(floor), params)


def _zero_bin_phasors(length: int, zero: np.ndarray, seed: int | None) -> np.ndarray:
    if seed is None:
        return np.ones(zero.size, dtype=np.complex128)
    rng = np.random.default_rng(seed)
    phasors = np.exp(1j * rng.uniform(-np.pi, np.pi, size=zero.size))
    # DC and Nyquist must stay real after enforce_hermitian; a sign keeps the magnitude
    self_conjugate = (zero == 0) | ((length % 2 == 0) & (zero == length // 2))
    phasors[self_conjugate] = np.where(rng.random(int(self_conjugate.sum())) < 0.5, -1.0, 1.0)
    return phasors


def deviation_sdr(reference: np.ndarray, stimulus: np.ndarray) -> tuple[float | None, SdrState]:
    """Signal-to-deviation ratio in dB. None with a state for the two infinite cases."""
    deviation = float(np.sum((stimulus - reference) ** 2))
    energy = float(np.sum(reference**2))
    if deviation == 0.0:
        return None, SdrState.no_deviation
    if energy == 0.0:
        return None, SdrState.all_deviation
    return 10.0 * np.log10(energy / deviation), SdrState.finite


def sdr_as_float(sdr_db: float | None, state: SdrState) -> float:
    if state == SdrState.no_deviation:
        return float("inf")
    if state == SdrState.all_deviation:
        return float("-inf")
    return float(sdr_db)


def apply_safeguard(
    signal: Signal,
    profile: ThresholdProfile,
    pad_len: int = 0,
    *,
    tolerance: float = 0.0,
    random_phase_seed: int | None = None,
    created_at: datetime | None = None,
) -> SafeguardedSignal:
    """Zero-pad `signal` by `pad_len` and lift every bin below `profile.floor` to the floor.

    Bins within `tolerance` of the floor count as safeguarded already; this lets a stored,
    quantized stimulus pass through unchanged when re-prepared with its own floor.
    """
    padded = signal.padded(pad_len)
    length = len(padded)
    if len(profile) != length:
        raise DimensionError(
            f"Profile has {len(profile)} bins but the padded frame has {length} samples"
        )

    spectrum = forward(padded)
    bins = spectrum.bins
    mags = np.abs(bins)
    floor = profile.floor
    lift = mags < floor - tolerance

    if not lift.any():
        stimulus = padded
    else:
        lifted = bins.copy()
        phased = lift & (mags > _ZERO_MAG)
        lifted[phased] = floor[phased] * bins[phased] / mags[phased]
        zero = np.flatnonzero(lift & (mags <= _ZERO_MAG))
        lifted[zero] = floor[zero] * _zero_bin_phasors(length, zero, random_phase_seed)
        symmetric = enforce_hermitian(Spectrum(lifted, spectrum.sample_rate))
        stimulus = inverse(symmetric, origin_tag=f"safeguarded:{signal.origin_tag}")

    logger.debug("Safeguarded %d of %d bins (pad %d)", int(lift.sum()), length, pad_len)
    return SafeguardedSignal(
        stimulus=stimulus,
        source_digest=signal.digest,
        profile=profile,
        pad_len=pad_len,
        sdr_db=sdr_as_float(*deviation_sdr(padded.samples, stimulus.samples)),
        created_at=created_at or datetime.now(UTC),
        modified_bins=int(lift.sum()),
    )


def safeguard_report(original: Signal, sg: SafeguardedSignal) -> float:
    """SDR of the stimulus against the zero-padded original: +inf unmodified, -inf silent."""
    padded = original.padded(sg.pad_len)
    if len(padded) != sg.frame_length:
        raise DimensionError(
            f"Padded original has {len(padded)} samples, stimulus has {sg.frame_length}"
        )
    return sdr_as_float(*deviation_sdr(padded.samples, sg.stimulus.samples))


def check_floor(
    stimulus: Signal, floor: np.ndarray, tolerance: float = 1e-9
) -> tuple[float, int]:
    """Worst (magnitude - floor) margin over all bins and where it occurs.

    Raises FloorViolationError when any bin is more than `tolerance` below its floor.
    """
    if len(stimulus) != floor.size:
        raise DimensionError(f"Floor has {floor.size} bins, stimulus has {len(stimulus)} samples")
    mags = forward(stimulus).magnitude()
    margin = mags - floor
    worst = int(np.argmin(margin))
    if margin[worst] < -tolerance:
        raise FloorViolationError(worst, float(mags[worst]), float(floor[worst]))
    return float(margin[worst]), worst


def split_sdr(sdr_db: float) -> tuple[float | None, SdrState]:
    """Inverse of sdr_as_float: JSON-safe value plus its state."""
    if np.isposinf(sdr_db):
        return None, SdrState.no_deviation
    if np.isneginf(sdr_db):
        return None, SdrState.all_deviation
    return float(sdr_db), SdrState.finite
