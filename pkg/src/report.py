"""Analysis artifacts: IR metrics, spectrum plot data and the report files.

All levels are unitary-spectrum dBFS (20*log10 |X[m]| with the 1/sqrt(L) DFT). Magnitudes
below 1e-15 render as -300 dB so every table stays numeric.
"""

import csv
import logging
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from src.audio_io import write_document
from src.errors import AudioIOError, DegenerateInputError, DimensionError, IncompleteSessionError
from src.estimator import trim_ir, zero_extend
from src.models import EventKind, MeasurementResult, SafeguardedSignal, Signal
from src.safeguard import DEFAULT_WINDOW_BINS, smoothed_power, split_sdr
from src.schemas import (
    IrMetrics,
    MeasurementSummary,
    ReportDocument,
    StimulusSummary,
)
from src.session import SessionLog
from src.spectral import forward, half_spectrum_freqs, transfer_function

logger = logging.getLogger(__name__)

DB_FLOOR = -300.0
_MAG_FLOOR = 1e-15

REPORT_JSON = "report.json"
PLOT_CSV = "plot.csv"
IR_CSV = "ir.csv"
METRICS_CSV = "metrics.csv"


def magnitude_db(mag: np.ndarray | float) -> np.ndarray:
    return 20.0 * np.log10(np.maximum(np.abs(mag), _MAG_FLOOR))


def power_db(power: np.ndarray | float) -> np.ndarray:
    return 10.0 * np.log10(np.maximum(power, _MAG_FLOOR**2))


@dataclass(frozen=True, eq=False)
class SpectrumPlotData:
    """Half-spectrum curves, bins 0..L//2, all in dB."""

    freq_hz: np.ndarray
    original: np.ndarray
    safeguarded: np.ndarray
    smoothed: np.ndarray
    smoothed_original: np.ndarray
    threshold: np.ndarray

    COLUMNS = (
        "freq_hz",
        "original_db",
        "safeguarded_db",
        "smoothed_db",
        "smoothed_original_db",
        "threshold_db",
    )

    def rows(self) -> Iterable[tuple[float, ...]]:
        return zip(
            self.freq_hz,
            self.original,
            self.safeguarded,
            self.smoothed,
            self.smoothed_original,
            self.threshold,
        )


def ir_metrics(h_est: Signal, h_true: np.ndarray, *, threshold_db: float = -60.0) -> IrMetrics:
    """RMSE, normalized error in dB and log-spectral distance of the estimated IR.

    The spectral distance is taken over half-spectrum bins where the true transfer
    function is within `threshold_db` of its peak.
    """
    length = len(h_est)
    truth = zero_extend(h_true, length)
    energy = float(np.sum(truth**2))
    if energy == 0.0:
        raise DegenerateInputError("Ground-truth impulse response is all zero")
    error = h_est.samples - truth
    half = length // 2 + 1
    est_mag = transfer_function(h_est.samples, length, h_est.sample_rate).magnitude()[:half]
    true_mag = transfer_function(truth, length, h_est.sample_rate).magnitude()[:half]
    keep = true_mag >= true_mag.max() * 10.0 ** (threshold_db / 20.0)
    distance = magnitude_db(est_mag[keep]) - magnitude_db(true_mag[keep])
    return IrMetrics(
        rmse=float(np.sqrt(np.mean(error**2))),
        error_db=float(power_db(np.sum(error**2) / energy)),
        spectral_log_distance_db=float(np.sqrt(np.mean(distance**2))),
        compared_bins=int(keep.sum()),
    )


def _smoothing_window(sg: SafeguardedSignal) -> int:
    window = sg.profile.params.window_bins or DEFAULT_WINDOW_BINS
    window = min(window, sg.frame_length)
    return window if window % 2 else window - 1


def make_plot_data(original: Signal, sg: SafeguardedSignal) -> SpectrumPlotData:
    padded = original.padded(sg.pad_len)
    if len(padded) != sg.frame_length or padded.sample_rate != sg.stimulus.sample_rate:
        raise DimensionError("Original and safeguarded signal frames are not comparable")
    half = sg.frame_length // 2 + 1
    window = _smoothing_window(sg)
    original_spec = forward(padded)
    sg_spec = forward(sg.stimulus)
    return SpectrumPlotData(
        freq_hz=half_spectrum_freqs(sg.frame_length, sg.stimulus.sample_rate),
        original=magnitude_db(original_spec.magnitude()[:half]),
        safeguarded=magnitude_db(sg_spec.magnitude()[:half]),
        smoothed=power_db(smoothed_power(sg_spec, window)[:half]),
        smoothed_original=power_db(smoothed_power(original_spec, window)[:half]),
        threshold=magnitude_db(sg.profile.half()),
    )


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: Iterable[str], rows: Iterable[Iterable[float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if not isinstance(v, str) else v for v in row])


def stimulus_summary(sg: SafeguardedSignal, source_digest: str) -> StimulusSummary:
    mags = forward(sg.stimulus).magnitude()
    floor = sg.profile.floor
    guarded = floor > 0
    margin = 0.0
    if guarded.any():
        margin = float(np.min(magnitude_db(mags[guarded]) - magnitude_db(floor[guarded])))
    sdr_db, state = split_sdr(sg.sdr_db)
    return StimulusSummary(
        digest=sg.digest,
        source_digest=source_digest,
        profile=sg.profile.params,
        frame_length=sg.frame_length,
        pad_len=sg.pad_len,
        sample_rate=sg.stimulus.sample_rate,
        sdr_db=sdr_db,
        sdr_state=state,
        min_floor_margin_db=margin,
    )


def emit_report(
    result: MeasurementResult,
    plot: SpectrumPlotData,
    log: SessionLog,
    *,
    stimulus: StimulusSummary,
    n_keep: int | None = None,
    h_true: np.ndarray | None = None,
    metrics: IrMetrics | None = None,
    raw_metrics: IrMetrics | None = None,
    raw_refused: str | None = None,
    formats: Iterable[str] = ("json", "csv"),
) -> list[Path]:
    """Write report.json and the CSV tables into the session directory.

    Output bytes depend only on the arguments; the report time is the session's latest
    measurement entry, never the wall clock.
    """
    anchor = log.latest(EventKind.measure) or (log.entries[-1] if log.entries else None)
    if anchor is None:
        raise IncompleteSessionError(["session.log.jsonl"])
    formats = set(formats)
    length = len(result.h_est)
    trimmed = trim_ir(result, n_keep or length)
    directory = log.directory
    written: list[Path] = []

    try:
        if "csv" in formats:
            _write_csv(directory / PLOT_CSV, SpectrumPlotData.COLUMNS, plot.rows())
            written.append(directory / PLOT_CSV)

            times = np.arange(length) / result.h_est.sample_rate
            if h_true is not None:
                truth = zero_extend(h_true, length)
                ir_rows = zip(range(length), times, result.h_est.samples, truth)
                ir_header = ("index", "time_s", "h_est", "h_true")
            else:
                ir_rows = zip(range(length), times, result.h_est.samples)
                ir_header = ("index", "time_s", "h_est")
            _write_csv(
                directory / IR_CSV,
                ir_header,
                ([str(i), *rest] for i, *rest in ir_rows),
            )
            written.append(directory / IR_CSV)

            metric_rows = [("tail_energy_ratio", trimmed.tail_ratio)]
            for prefix, record in (("", metrics), ("raw_", raw_metrics)):
                if record is not None:
                    metric_rows += [(prefix + k, v) for k, v in record.model_dump().items()]
            _write_csv(directory / METRICS_CSV, ("metric", "value"), metric_rows)
            written.append(directory / METRICS_CSV)

        if "json" in formats:
            document = ReportDocument(
                session_id=log.session_id,
                generated_at=anchor.timestamp,
                stimulus=stimulus,
                measurement=MeasurementSummary(
                    mode=result.mode,
                    averaged_frames=result.averaged_frames,
                    stimulus_digest=result.stimulus_digest,
                    n_keep=trimmed.taps.size,
                    tail_energy_ratio=trimmed.tail_ratio,
                ),
                metrics=metrics,
                raw_metrics=raw_metrics,
                raw_refused=raw_refused,
                files=sorted(p.name for p in written),
            )
            write_document(document, directory / REPORT_JSON)
            written.append(directory / REPORT_JSON)
    except OSError as exc:
        raise AudioIOError(f"Cannot write report into {directory}: {exc}") from exc

    logger.info("Report written: %s", ", ".join(p.name for p in written))
    return written
