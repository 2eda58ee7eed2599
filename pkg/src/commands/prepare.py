"""`safeguard prepare`: turn any sound file into a safeguarded stimulus plus sidecar."""

import argparse
import logging
from pathlib import Path

from src import __version__
from src.audio_io import (
    quantization_bound,
    read_sidecar,
    read_wav,
    sidecar_path,
    wav_format,
    write_sidecar,
    write_wav,
)
from src.commands.common import format_sdr, given, log_config, run_config, session_dir
from src.integrity import file_digest
from src.models import EventKind, ThresholdProfile
from src.safeguard import (
    apply_safeguard,
    check_floor,
    constant_profile,
    smoothed_profile,
    split_sdr,
)
from src.schemas import MetadataSidecar, ProfileParams, RunConfig
from src.session import open_session, utc_now
from src.spectral import forward

logger = logging.getLogger(__name__)


def add_parser(subparsers, parent: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser(
        "prepare",
        parents=[parent],
        help="convert a sound file into a safeguarded stimulus",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("input", type=Path, help="source WAV file")
    p.add_argument("--input-channel", type=int, help="channel to use from a multichannel file")

    g = p.add_argument_group("Threshold profile")
    g.add_argument("--window-bins", type=int, help="smoothing window (odd, default 65)")
    g.add_argument("--rel-floor-db", type=float, help="floor relative to smoothed power (-20)")
    g.add_argument("--abs-floor-db", type=float, help="floor relative to spectral peak (-60)")
    g.add_argument(
        "--flat-floor",
        action="store_const",
        const=True,
        help="constant floor at --level-db below the spectral peak",
    )
    g.add_argument("--level-db", type=float, help="constant-floor level (-40)")

    g = p.add_argument_group("Stimulus")
    g.add_argument("--pad-len", type=int, help="trailing zeros appended before safeguarding")
    g.add_argument("--random-phase-seed", type=int, help="random phases for zero-magnitude bins")
    g.add_argument("--format", choices=["pcm16", "pcm24", "float32"], help="stimulus WAV format")
    p.set_defaults(handler=run)


def _stem(path: Path) -> str:
    return path.name.removesuffix(".wav").removesuffix(".sg")


def _profile_params(config: RunConfig, frame_length: int) -> ProfileParams:
    sg = config.safeguard
    if sg.flat_floor:
        return ProfileParams(kind="constant", level_db=sg.level_db)
    window_bins = min(sg.window_bins, frame_length - 1 + frame_length % 2)
    if window_bins != sg.window_bins:
        logger.warning(
            "window_bins %d exceeds the %d-sample frame; using %d",
            sg.window_bins,
            frame_length,
            window_bins,
        )
    return ProfileParams(
        kind="smoothed",
        window_bins=window_bins,
        rel_floor_db=sg.rel_floor_db,
        abs_floor_db=sg.abs_floor_db,
    )


def _stored_floor(path: Path, params: ProfileParams, pad_len: int) -> ThresholdProfile | None:
    """Floor of an already-safeguarded input, when it was built with the requested profile."""
    if not path.name.endswith(".sg.wav") or not sidecar_path(path).exists():
        return None
    sidecar = read_sidecar(path)
    if sidecar.profile != params or pad_len != 0:
        return None
    return ThresholdProfile.from_half(sidecar.floor, sidecar.frame_length, sidecar.profile)


def run(args: argparse.Namespace) -> int:
    config = run_config(
        args,
        safeguard=given(
            window_bins=args.window_bins,
            rel_floor_db=args.rel_floor_db,
            abs_floor_db=args.abs_floor_db,
            flat_floor=args.flat_floor,
            level_db=args.level_db,
            pad_len=args.pad_len,
            random_phase_seed=args.random_phase_seed,
            input_channel=args.input_channel,
        ),
    )
    pad_len = config.safeguard.pad_len
    source = read_wav(args.input, channel=config.safeguard.input_channel)
    params = _profile_params(config, len(source) + pad_len)

    tolerance = 0.0
    profile = _stored_floor(args.input, params, pad_len)
    if profile is not None and len(profile) == len(source):
        # Re-preparation: keep the stored floor, forgive what storage quantization moved
        tolerance = quantization_bound(wav_format(args.input), source.samples)
        logger.info("Re-preparing %s against its stored floor", args.input.name)
    else:
        spectrum = forward(source.padded(pad_len))
        if params.kind == "constant":
            profile = constant_profile(params.level_db, spectrum)
        else:
            profile = smoothed_profile(
                spectrum, params.window_bins, params.rel_floor_db, params.abs_floor_db
            )

    created_at = utc_now()
    sg = apply_safeguard(
        source,
        profile,
        pad_len,
        tolerance=tolerance,
        random_phase_seed=config.safeguard.random_phase_seed,
        created_at=created_at,
    )
    sdr_db, sdr_state = split_sdr(sg.sdr_db)

    with open_session(session_dir(config, args)) as log:
        log_config(log, "prepare", config)
        out_path = log.directory / f"{_stem(args.input)}.sg.wav"
        write_wav(sg.stimulus, out_path, config.format)
        # The floor must survive storage, not just the float64 transform
        check_floor(
            read_wav(out_path),
            profile.floor,
            quantization_bound(config.format, sg.stimulus.samples),
        )
        sidecar = MetadataSidecar(
            stimulus_file=out_path.name,
            stimulus_digest=file_digest(out_path),
            source_file=str(args.input.resolve()),
            source_digest=sg.source_digest,
            profile=profile.params,
            floor=profile.half().tolist(),
            frame_length=sg.frame_length,
            pad_len=pad_len,
            sdr_db=sdr_db,
            sdr_state=sdr_state,
            sample_rate=sg.stimulus.sample_rate,
            format=config.format,
            random_phase_seed=config.safeguard.random_phase_seed,
            created_at=created_at,
            tool_version=__version__,
        )
        sidecar_file = write_sidecar(sidecar, out_path)
        log.record(EventKind.prepare, artifact=out_path)
        log.record(
            EventKind.prepare,
            artifact=sidecar_file,
            payload={
                "source": str(args.input),
                "modified_bins": sg.modified_bins,
                "sdr_db": sdr_db,
                "sdr_state": sdr_state.value,
            },
        )

    print(f"stimulus: {out_path}")
    print(f"modified bins: {sg.modified_bins} of {sg.frame_length}")
    print(f"sdr: {format_sdr(sdr_db, sdr_state.value)}")
    return 0
