"""`safeguard report`: analysis tables and report.json for the latest measurement."""

import argparse
import json
from pathlib import Path

import numpy as np

from src.audio_io import load_safeguarded, read_wav
from src.config import settings
from src.errors import IncompleteSessionError
from src.models import EventKind, MeasurementResult, Signal
from src.report import emit_report, ir_metrics, make_plot_data, stimulus_summary
from src.schemas import ReportDocument, ResultDocument
from src.session import LOG_FILE, SessionLog


def add_parser(subparsers, parent: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser("report", parents=[parent], help="write report files for a session")
    p.add_argument("session_dir", type=Path, nargs="?", help="session directory")
    p.add_argument("--n-keep", type=int, help="leading IR taps to keep in the tail-energy ratio")
    p.add_argument(
        "--formats",
        nargs="+",
        choices=["json", "csv"],
        default=["json", "csv"],
        help="which report files to write",
    )
    p.add_argument("--schema", action="store_true", help="print the report JSON schema and exit")
    p.set_defaults(handler=run)


def _latest_measurement(log: SessionLog) -> dict[str, str]:
    for entry in reversed(log.entries):
        if entry.kind == EventKind.measure and entry.payload and "artifacts" in entry.payload:
            return entry.payload["artifacts"]
    raise IncompleteSessionError([f"{LOG_FILE} (measure entry)"])


def run(args: argparse.Namespace) -> int:
    if args.schema:
        print(json.dumps(ReportDocument.model_json_schema(), indent=2))
        return 0

    directory = args.session_dir or args.out_dir or settings.out_dir
    log = SessionLog.load(directory)
    if not log.entries:
        raise IncompleteSessionError([LOG_FILE])
    roles = _latest_measurement(log)
    paths = log.resolve(list(roles.values()))
    path_of = {role: paths[name] for role, name in roles.items()}

    document = ResultDocument.model_validate_json(path_of["result"].read_text(encoding="utf-8"))
    sg, sidecar = load_safeguarded(path_of["stimulus"])
    if "source" in path_of:
        original = read_wav(path_of["source"])
    else:
        unpadded = sg.stimulus.samples[: sg.frame_length - sg.pad_len]
        original = Signal(unpadded, sg.stimulus.sample_rate, "stimulus")

    result = MeasurementResult(
        h_est=Signal(document.h_est, document.sample_rate, "h_est"),
        averaged_frames=document.averaged_frames,
        mode=document.mode,
        stimulus_digest=document.stimulus_digest,
    )
    h_true = np.asarray(document.h_true) if document.h_true is not None else None
    metrics = raw_metrics = raw_refused = None
    if h_true is not None:
        metrics = ir_metrics(result.h_est, h_true)
    if document.raw is not None:
        raw_refused = document.raw.refused
        if document.raw.h_est is not None and h_true is not None:
            raw_metrics = ir_metrics(Signal(document.raw.h_est, document.sample_rate), h_true)

    written = emit_report(
        result,
        make_plot_data(original, sg),
        log,
        stimulus=stimulus_summary(sg, sidecar.source_digest),
        n_keep=args.n_keep,
        h_true=h_true,
        metrics=metrics,
        raw_metrics=raw_metrics,
        raw_refused=raw_refused,
        formats=args.formats,
    )
    log.record(EventKind.report, payload={"files": [path.name for path in written]})

    for path in written:
        print(path)
    if metrics is not None:
        print(f"error: {metrics.error_db:.2f} dB")
    return 0
