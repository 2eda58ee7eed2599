from datetime import datetime
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.models import EventKind, MeasurementMode, NoiseKind, ProfileKind, SdrState, WavFormat

SIDECAR_SCHEMA_VERSION = 1
RESULT_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1


# Safeguarding
class ProfileParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ProfileKind
    window_bins: int | None = None
    rel_floor_db: float | None = None
    abs_floor_db: float | None = None
    level_db: float | None = None


class SafeguardParams(BaseModel):
    window_bins: int = Field(default=65, ge=1)
    rel_floor_db: float = -20.0
    abs_floor_db: float = -60.0
    pad_len: int = Field(default=0, ge=0)
    flat_floor: bool = False
    level_db: float = -40.0
    random_phase_seed: int | None = None
    input_channel: int | None = Field(default=None, ge=0)

    @field_validator("window_bins")
    @classmethod
    def window_must_be_odd(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("window_bins must be odd")
        return value


# Channel / measurement
class ChannelSpec(BaseModel):
    ir_path: Path | None = None
    taps: list[float] | None = None
    noise_kind: NoiseKind = NoiseKind.none
    noise_sigma: float | None = Field(default=None, ge=0)
    snr_db: float | None = None
    seed: int = 0

    @model_validator(mode="after")
    def one_ir_source(self) -> "ChannelSpec":
        if self.ir_path is not None and self.taps is not None:
            raise ValueError("Give either ir_path or taps, not both")
        if self.noise_kind == NoiseKind.white_gaussian and (
            (self.noise_sigma is None) == (self.snr_db is None)
        ):
            raise ValueError("white-gaussian noise needs exactly one of noise_sigma, snr_db")
        return self


class MeasureParams(BaseModel):
    periods: int = Field(default=2, ge=2)
    single_shot: bool = False
    min_mag: float | None = Field(default=None, ge=0)


class RunConfig(BaseModel):
    """Every tunable of a CLI run. Serialized whole into the session log."""

    safeguard: SafeguardParams = SafeguardParams()
    channel: ChannelSpec = ChannelSpec()
    measure: MeasureParams = MeasureParams()
    out_dir: Path | None = None
    format: WavFormat = WavFormat.float32


# Stimulus metadata
class MetadataSidecar(BaseModel):
    schema_version: int = SIDECAR_SCHEMA_VERSION
    stimulus_file: str
    stimulus_digest: str
    source_file: str | None = None
    source_digest: str
    profile: ProfileParams
    floor: list[float] = Field(description="Half-spectrum floor, bins 0..L//2")
    frame_length: int = Field(ge=2)
    pad_len: int = Field(ge=0)
    sdr_db: float | None = None
    sdr_state: SdrState
    sample_rate: int = Field(gt=0)
    format: WavFormat
    random_phase_seed: int | None = None
    created_at: datetime
    tool_version: str


# Session log
class LogEntry(BaseModel):
    timestamp: datetime
    kind: EventKind
    digest: str
    artifact: str | None = None
    payload: dict | None = None


# Measurement result (result.json)
class RawComparison(BaseModel):
    h_est: list[float] | None = None
    refused: str | None = None
    refused_bin: int | None = None


class ResultDocument(BaseModel):
    schema_version: Literal[1] = RESULT_SCHEMA_VERSION
    mode: MeasurementMode
    averaged_frames: int = Field(ge=1)
    stimulus_digest: str
    channel_digest: str | None = None
    sample_rate: int = Field(gt=0)
    h_est: list[float]
    h_true: list[float] | None = None
    raw: RawComparison | None = None


# Report (report.json)
class IrMetrics(BaseModel):
    rmse: float
    error_db: float
    spectral_log_distance_db: float
    compared_bins: int


class StimulusSummary(BaseModel):
    digest: str
    source_digest: str
    profile: ProfileParams
    frame_length: int
    pad_len: int
    sample_rate: int
    sdr_db: float | None
    sdr_state: SdrState
    min_floor_margin_db: float


class MeasurementSummary(BaseModel):
    mode: MeasurementMode
    averaged_frames: int
    stimulus_digest: str
    n_keep: int
    tail_energy_ratio: float


class ReportDocument(BaseModel):
    schema_version: Literal[1] = REPORT_SCHEMA_VERSION
    session_id: str
    generated_at: datetime
    db_reference: str = "unitary-spectrum dBFS (20*log10 |X[m]|, 1/sqrt(L) DFT)"
    stimulus: StimulusSummary
    measurement: MeasurementSummary
    metrics: IrMetrics | None = None
    raw_metrics: IrMetrics | None = None
    raw_refused: str | None = None
    files: list[str]
