"""WAV input/output and the metadata sidecar bound to a safeguarded stimulus.

Integer PCM is normalized by 2**(bits-1), so the full-scale negative code reads as -1.0 and
the writable range is [-1, 1]; +1.0 maps to the largest positive code. No dither.
"""

import logging
import os
import tempfile
from pathlib import Path

import numpy as np
import soundfile as sf
from pydantic import BaseModel, ValidationError

from src.errors import (
    AudioIOError,
    IntegrityError,
    OverloadError,
    UnsupportedFormatError,
    UnsupportedVersionError,
)
from src.integrity import verify_file
from src.models import SafeguardedSignal, Signal, ThresholdProfile, WavFormat
from src.safeguard import sdr_as_float
from src.schemas import SIDECAR_SCHEMA_VERSION, MetadataSidecar

logger = logging.getLogger(__name__)

SUBTYPES = {
    WavFormat.pcm16: "PCM_16",
    WavFormat.pcm24: "PCM_24",
    WavFormat.float32: "FLOAT",
}
_FORMATS = {subtype: fmt for fmt, subtype in SUBTYPES.items()}
_BITS = {WavFormat.pcm16: 16, WavFormat.pcm24: 24}
QUANTIZATION_SIGMAS = 6.0


def wav_format(path: Path) -> WavFormat:
    try:
        info = sf.info(str(path))
    except (RuntimeError, sf.LibsndfileError) as exc:
        raise AudioIOError(f"Cannot open {path}: {exc}") from exc
    if info.format != "WAV" or info.subtype not in _FORMATS:
        raise UnsupportedFormatError(
            f"{Path(path).name}: unsupported format {info.format}/{info.subtype}; "
            "expected WAV with PCM_16, PCM_24 or FLOAT"
        )
    return _FORMATS[info.subtype]


def read_wav(path: Path, channel: int | None = None) -> Signal:
    """Read a mono WAV (or one channel of a multichannel WAV) as float64 in [-1, 1)."""
    path = Path(path)
    fmt = wav_format(path)
    dtype = "float32" if fmt == WavFormat.float32 else "int32"
    try:
        data, sample_rate = sf.read(str(path), dtype=dtype, always_2d=True)
    except (RuntimeError, sf.LibsndfileError) as exc:
        raise AudioIOError(f"Cannot read {path}: {exc}") from exc

    n_channels = data.shape[1]
    if n_channels > 1 and channel is None:
        raise UnsupportedFormatError(
            f"{path.name} has {n_channels} channels; select one with --input-channel"
        )
    index = channel or 0
    if not 0 <= index < n_channels:
        raise AudioIOError(f"{path.name} has no channel {index}")

    column = data[:, index]
    if fmt == WavFormat.float32:
        samples = column.astype(np.float64)
    else:
        # libsndfile left-aligns integer PCM in int32
        samples = column.astype(np.float64) / 2.0**31
    logger.debug("Read %s: %d samples @ %d Hz (%s)", path.name, samples.size, sample_rate, fmt)
    return Signal(samples, sample_rate, origin_tag=path.name)


def quantize(samples: np.ndarray, bits: int) -> np.ndarray:
    """Round to the integer grid of a `bits`-bit PCM word. Refuses anything beyond ±1.0."""
    peak_index = int(np.argmax(np.abs(samples)))
    peak = float(abs(samples[peak_index]))
    if peak > 1.0:
        raise OverloadError(peak, peak_index)
    scale = 2 ** (bits - 1)
    return np.clip(np.round(samples * scale), -scale, scale - 1).astype(np.int32)


def _atomic_target(path: Path, suffix: str) -> Path:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=suffix)
    os.close(fd)
    return Path(tmp)


def write_wav(signal: Signal, path: Path, fmt: WavFormat = WavFormat.float32) -> Path:
    """Write a mono WAV atomically (temp file + rename)."""
    path = Path(path)
    if fmt == WavFormat.float32:
        data = signal.samples.astype(np.float32)
    else:
        codes = quantize(signal.samples, _BITS[fmt])
        data = codes.astype(np.int16) if fmt == WavFormat.pcm16 else codes << 8
    tmp = _atomic_target(path, ".wav")
    try:
        sf.write(str(tmp), data, signal.sample_rate, subtype=SUBTYPES[fmt], format="WAV")
        os.replace(tmp, path)
    except (OSError, RuntimeError, sf.LibsndfileError) as exc:
        tmp.unlink(missing_ok=True)
        raise AudioIOError(f"Cannot write {path}: {exc}") from exc
    return path


def sidecar_path(wav_path: Path) -> Path:
    """foo.sg.wav -> foo.sg.json; foo.wav -> foo.sg.json."""
    wav_path = Path(wav_path)
    stem = wav_path.name.removesuffix(".wav").removesuffix(".sg")
    return wav_path.with_name(f"{stem}.sg.json")


def write_document(document: BaseModel, target: Path) -> Path:
    """Write a pydantic model as indented JSON, atomically."""
    target = Path(target)
    tmp = _atomic_target(target, ".json")
    try:
        tmp.write_text(document.model_dump_json(indent=2) + "\n", encoding="utf-8")
        os.replace(tmp, target)
    except OSError as exc:
        tmp.unlink(missing_ok=True)
        raise AudioIOError(f"Cannot write {target}: {exc}") from exc
    return target


def write_sidecar(sidecar: MetadataSidecar, wav_path: Path) -> Path:
    return write_document(sidecar, sidecar_path(wav_path))


def read_sidecar(wav_path: Path, *, check_digest: bool = True) -> MetadataSidecar:
    """Load the sidecar next to `wav_path`, rejecting unknown versions and edited audio."""
    target = sidecar_path(wav_path)
    try:
        raw = target.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise AudioIOError(f"No sidecar {target.name} next to {Path(wav_path).name}") from exc
    except OSError as exc:
        raise AudioIOError(f"Cannot read sidecar {target}: {exc}") from exc
    try:
        sidecar = MetadataSidecar.model_validate_json(raw)
    except ValidationError as exc:
        raise IntegrityError(f"Sidecar {target.name} is malformed: {exc}") from exc
    if sidecar.schema_version != SIDECAR_SCHEMA_VERSION:
        raise UnsupportedVersionError(
            f"Sidecar {target.name} has schema_version {sidecar.schema_version}; "
            f"this tool reads version {SIDECAR_SCHEMA_VERSION}"
        )
    if check_digest:
        verify_file(Path(wav_path), sidecar.stimulus_digest, target.name)
    return sidecar


def quantization_bound(fmt: WavFormat, samples: np.ndarray) -> float:
    """Per-bin magnitude change (unitary DFT) that storing `samples` as `fmt` may cause.

    float32: the worst case sqrt(L) * max|e|. PCM: rounding error is uniform over one code
    step q, so each unitary bin error has standard deviation q / sqrt(12) for any L; the
    bound is QUANTIZATION_SIGMAS of those.
    """
    if fmt == WavFormat.float32:
        step = float(np.max(np.abs(samples))) * 2.0**-24
        return float(np.sqrt(samples.size) * step) + 1e-9
    code_step = 2.0 ** -(_BITS[fmt] - 1)
    return QUANTIZATION_SIGMAS * code_step / np.sqrt(12.0) + 1e-9


def load_safeguarded(path: Path) -> tuple[SafeguardedSignal, MetadataSidecar]:
    """Rebuild a SafeguardedSignal from a stored stimulus and its digest-checked sidecar."""
    sidecar = read_sidecar(path)
    signal = read_wav(path)
    if len(signal) != sidecar.frame_length or signal.sample_rate != sidecar.sample_rate:
        raise IntegrityError(f"{Path(path).name} does not match the frame described by its sidecar")
    profile = ThresholdProfile.from_half(
        np.asarray(sidecar.floor), sidecar.frame_length, sidecar.profile
    )
    sg = SafeguardedSignal(
        stimulus=signal,
        source_digest=sidecar.source_digest,
        profile=profile,
        pad_len=sidecar.pad_len,
        sdr_db=sdr_as_float(sidecar.sdr_db, sidecar.sdr_state),
        created_at=sidecar.created_at,
    )
    return sg, sidecar
