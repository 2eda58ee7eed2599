"""`safeguard verify`: re-check a stored stimulus against the floor in its sidecar."""

import argparse
from pathlib import Path

from src.audio_io import quantization_bound, read_sidecar, read_wav
from src.errors import FloorViolationError
from src.models import EventKind, ThresholdProfile
from src.safeguard import check_floor
from src.session import open_session


def add_parser(subparsers, parent: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser(
        "verify", parents=[parent], help="check every bin of a .sg.wav against its floor"
    )
    p.add_argument("stimulus", type=Path, help="safeguarded WAV with a .sg.json sidecar")
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    sidecar = read_sidecar(args.stimulus)
    signal = read_wav(args.stimulus)
    profile = ThresholdProfile.from_half(sidecar.floor, len(signal), sidecar.profile)
    tolerance = quantization_bound(sidecar.format, signal.samples)

    with open_session(args.out_dir or args.stimulus.parent) as log:
        try:
            margin, worst = check_floor(signal, profile.floor, tolerance)
        except FloorViolationError as exc:
            log.record(
                EventKind.verify,
                payload={"stimulus": args.stimulus.name, "passed": False, "detail": exc.detail},
            )
            raise
        log.record(
            EventKind.verify,
            payload={
                "stimulus": args.stimulus.name,
                "passed": True,
                "margin": margin,
                "worst_bin": worst,
                "tolerance": tolerance,
            },
        )

    print(f"{args.stimulus.name}: all {len(signal)} bins at or above the floor")
    print(f"worst margin {margin:.3e} at bin {worst} (tolerance {tolerance:.3e})")
    return 0
