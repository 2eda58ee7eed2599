from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from datetime import datetime
from typing import TYPE_CHECKING

import numpy as np

from src.errors import InvalidSignalError, ParameterError

if TYPE_CHECKING:
    from src.schemas import ProfileParams


class ProfileKind(str, enum.Enum):
    constant = "constant"
    smoothed = "smoothed"


class NoiseKind(str, enum.Enum):
    none = "none"
    white_gaussian = "white-gaussian"


class MeasurementMode(str, enum.Enum):
    periodic = "periodic"
    single_shot = "single-shot"


class SdrState(str, enum.Enum):
    finite = "finite"
    no_deviation = "no-deviation"
    all_deviation = "all-deviation"


class WavFormat(str, enum.Enum):
    pcm16 = "pcm16"
    pcm24 = "pcm24"
    float32 = "float32"


class EventKind(str, enum.Enum):
    config = "config"
    prepare = "prepare"
    measure = "measure"
    report = "report"
    verify = "verify"


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


def array_digest(array: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(array).tobytes()).hexdigest()


@dataclass(frozen=True, eq=False)
class Signal:
    """Real discrete-time frame. Samples are float64, read-only, length >= 2, finite."""

    samples: np.ndarray
    sample_rate: int
    origin_tag: str = ""

    def __post_init__(self):
        samples = np.array(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise InvalidSignalError(f"Signal must be one-dimensional, got shape {samples.shape}")
        if samples.size < 2:
            raise InvalidSignalError(f"Signal length must be >= 2, got {samples.size}")
        if not np.all(np.isfinite(samples)):
            bad = int(np.flatnonzero(~np.isfinite(samples))[0])
            raise InvalidSignalError(f"Signal has a non-finite sample at index {bad}")
        if int(self.sample_rate) <= 0:
            raise InvalidSignalError(f"Sample rate must be positive, got {self.sample_rate}")
        object.__setattr__(self, "samples", _frozen(samples))
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def digest(self) -> str:
        return array_digest(self.samples)

    def rms(self) -> float:
        return float(np.sqrt(np.mean(self.samples**2)))

    def padded(self, pad_len: int) -> Signal:
        if pad_len < 0:
            raise ParameterError(f"pad_len must be >= 0, got {pad_len}")
        if pad_len == 0:
            return self
        return Signal(
            np.concatenate([self.samples, np.zeros(pad_len)]), self.sample_rate, self.origin_tag
        )


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Complex per-bin vector in the unitary DFT scale."""

    bins: np.ndarray
    sample_rate: int
    hermitian: bool = False

    def __post_init__(self):
        bins = np.array(self.bins, dtype=np.complex128)
        if bins.ndim != 1 or bins.size < 1:
            raise InvalidSignalError(f"Spectrum must be a non-empty vector, got shape {bins.shape}")
        if not np.all(np.isfinite(bins)):
            bad = int(np.flatnonzero(~np.isfinite(bins))[0])
            raise InvalidSignalError(f"Spectrum has a non-finite bin at index {bad}")
        object.__setattr__(self, "bins", _frozen(bins))

    def __len__(self) -> int:
        return self.bins.size

    def magnitude(self) -> np.ndarray:
        return np.abs(self.bins)


def is_hermitian_compatible(floor: np.ndarray) -> bool:
    """floor[m] == floor[L - m mod L] for every m."""
    return bool(np.array_equal(floor, np.roll(floor[::-1], 1)))


@dataclass(frozen=True, eq=False)
class ThresholdProfile:
    """Per-bin floor over a full DFT frame. floor[m] == floor[L-m mod L]."""

    floor: np.ndarray
    params: ProfileParams

    def __post_init__(self):
        floor = np.array(self.floor, dtype=np.float64)
        if floor.ndim != 1 or not np.all(np.isfinite(floor)) or np.any(floor < 0):
            raise ParameterError("Threshold floor must be a finite, nonnegative vector")
        if not is_hermitian_compatible(floor):
            bad = int(np.flatnonzero(floor != np.roll(floor[::-1], 1))[0])
            raise ParameterError(
                f"Threshold floor is not mirror-symmetric: bin {bad} differs from bin "
                f"{(floor.size - bad) % floor.size}"
            )
        object.__setattr__(self, "floor", _frozen(floor))

    def __len__(self) -> int:
        return self.floor.size

    def half(self) -> np.ndarray:
        return self.floor[: self.floor.size // 2 + 1]

    @classmethod
    def from_half(cls, half: np.ndarray, length: int, params: ProfileParams) -> ThresholdProfile:
        half = np.asarray(half, dtype=np.float64)
        if half.size != length // 2 + 1:
            raise ParameterError(
                f"Half floor has {half.size} bins, frame of {length} needs {length // 2 + 1}"
            )
        floor = np.empty(length)
        floor[: half.size] = half
        mirror = np.arange(half.size, length)
        floor[mirror] = half[length - mirror]
        return cls(floor, params)


@dataclass(frozen=True, eq=False)
class SafeguardedSignal:
    stimulus: Signal
    source_digest: str
    profile: ThresholdProfile
    pad_len: int
    sdr_db: float
    created_at: datetime
    modified_bins: int = 0

    @property
    def frame_length(self) -> int:
        return len(self.stimulus)

    @property
    def digest(self) -> str:
        return self.stimulus.digest

    @property
    def min_floor(self) -> float:
        return float(self.profile.floor.min())


@dataclass(frozen=True, eq=False)
class ChannelModel:
    """Ground-truth LTI channel. Set either `noise_sigma` or `snr_db` for white-gaussian noise."""

    ir: np.ndarray
    sample_rate: int
    noise_kind: NoiseKind = NoiseKind.none
    noise_sigma: float | None = None
    snr_db: float | None = None
    seed: int = 0

    def __post_init__(self):
        ir = np.array(self.ir, dtype=np.float64).ravel()
        if ir.size < 1 or not np.all(np.isfinite(ir)):
            raise ParameterError("Channel impulse response must be a non-empty finite vector")
        object.__setattr__(self, "ir", _frozen(ir))
        if self.noise_kind == NoiseKind.white_gaussian:
            if (self.noise_sigma is None) == (self.snr_db is None):
                raise ParameterError(
                    "White-gaussian noise needs exactly one of noise_sigma, snr_db"
                )
            if self.noise_sigma is not None and self.noise_sigma < 0:
                raise ParameterError(f"noise_sigma must be >= 0, got {self.noise_sigma}")

    @property
    def n_h(self) -> int:
        return self.ir.size

    @property
    def digest(self) -> str:
        h = hashlib.sha256(self.ir.tobytes())
        h.update(
            f"{self.sample_rate}|{self.noise_kind.value}|{self.noise_sigma}|"
            f"{self.snr_db}|{self.seed}".encode()
        )
        return h.hexdigest()


@dataclass(frozen=True, eq=False)
class Recording:
    frames: tuple[Signal, ...]
    mode: MeasurementMode
    channel_digest: str
    periods: int = 1
    noise: tuple[np.ndarray, ...] | None = None

    def __post_init__(self):
        lengths = {len(frame) for frame in self.frames}
        if len(lengths) > 1:
            raise InvalidSignalError(f"Recording frames differ in length: {sorted(lengths)}")

    @property
    def frame_length(self) -> int:
        return len(self.frames[0]) if self.frames else 0


@dataclass(frozen=True, eq=False)
class MeasurementResult:
    h_est: Signal
    averaged_frames: int
    mode: MeasurementMode
    stimulus_digest: str
    residual: Signal | None = None


@dataclass(frozen=True)
class TrimmedIR:
    taps: np.ndarray = field(repr=False)
    tail_ratio: float
