"""`safeguard measure`: push a safeguarded stimulus through a channel and estimate its IR.

The channel is simulated from a WAV impulse response or inline taps (a unit impulse when
neither is given), or a real response recording is ingested with --response. With
--compare-raw the original, unsafeguarded file goes through the same channel and noise
seeds and is deconvolved with no denominator guard.
"""

import argparse
import logging
from pathlib import Path

import numpy as np

from src.audio_io import (
    load_safeguarded,
    read_wav,
    sidecar_path,
    write_document,
    write_wav,
)
from src.channel import (
    noise_sigma,
    noiseless_output,
    simulate_periodic,
    simulate_single_shot,
)
from src.commands.common import given, log_config, run_config, session_dir
from src.errors import (
    EmptyRecordingError,
    IntegrityError,
    InvalidSignalError,
    ParameterError,
    UnsafeguardedDenominatorError,
)
from src.estimator import average_frames, deconvolve, measure
from src.models import (
    ChannelModel,
    EventKind,
    MeasurementMode,
    NoiseKind,
    Recording,
    SafeguardedSignal,
    Signal,
)
from src.report import ir_metrics
from src.schemas import (
    ChannelSpec,
    MeasureParams,
    MetadataSidecar,
    RawComparison,
    ResultDocument,
)
from src.session import open_session

logger = logging.getLogger(__name__)

RESULT_JSON = "result.json"
RECORDING_WAV = "recording.wav"


def add_parser(subparsers, parent: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser(
        "measure",
        parents=[parent],
        help="measure an impulse response with a safeguarded stimulus",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("stimulus", type=Path, help="safeguarded WAV with a .sg.json sidecar")

    g = p.add_argument_group("Channel")
    source = g.add_mutually_exclusive_group()
    source.add_argument("--channel", type=Path, dest="ir_path", help="impulse response WAV")
    source.add_argument("--taps", type=float, nargs="+", help="impulse response taps")
    noise = g.add_mutually_exclusive_group()
    noise.add_argument("--snr", type=float, dest="snr_db", help="white noise at this SNR (dB)")
    noise.add_argument("--noise-sigma", type=float, help="white noise standard deviation")
    g.add_argument("--seed", type=int, help="noise seed")

    g = p.add_argument_group("Measurement")
    mode = g.add_mutually_exclusive_group()
    mode.add_argument("--periods", type=int, help="stimulus repetitions, first one discarded")
    mode.add_argument(
        "--single-shot", action="store_const", const=True, help="one zero-padded presentation"
    )
    g.add_argument("--response", type=Path, help="recorded response instead of a simulation")
    g.add_argument(
        "--compare-raw",
        nargs="?",
        const="",
        type=str,
        metavar="ORIGINAL",
        help="also measure with the unsafeguarded original (default: the sidecar's source)",
    )
    g.add_argument("--min-mag", type=float, help="smallest accepted denominator magnitude")
    p.set_defaults(handler=run)


def _channel_overrides(args: argparse.Namespace) -> dict:
    values = given(seed=args.seed)
    if args.ir_path is not None:
        values.update(ir_path=args.ir_path, taps=None)
    if args.taps is not None:
        values.update(taps=args.taps, ir_path=None)
    if args.snr_db is not None:
        values.update(noise_kind=NoiseKind.white_gaussian, snr_db=args.snr_db, noise_sigma=None)
    if args.noise_sigma is not None:
        values.update(
            noise_kind=NoiseKind.white_gaussian, noise_sigma=args.noise_sigma, snr_db=None
        )
    return values


def build_channel(spec: ChannelSpec, sample_rate: int) -> ChannelModel:
    if spec.ir_path is not None:
        ir = read_wav(spec.ir_path)
        if ir.sample_rate != sample_rate:
            raise ParameterError(
                f"Impulse response is at {ir.sample_rate} Hz, stimulus at {sample_rate} Hz"
            )
        taps = ir.samples
    elif spec.taps is not None:
        taps = np.asarray(spec.taps)
    else:
        taps = np.ones(1)
    return ChannelModel(
        ir=taps,
        sample_rate=sample_rate,
        noise_kind=spec.noise_kind,
        noise_sigma=spec.noise_sigma,
        snr_db=spec.snr_db,
        seed=spec.seed,
    )


def simulate(
    excitation: SafeguardedSignal | Signal, channel: ChannelModel, params: MeasureParams
) -> Recording:
    if params.single_shot:
        return simulate_single_shot(excitation, channel)
    return simulate_periodic(excitation, channel, params.periods)


def ingest_response(path: Path, frame_length: int, single_shot: bool) -> Recording:
    """Split a recorded response into stimulus-length frames.

    Periodic recordings drop the transient first frame and so need at least two; a
    single-shot recording is its first frame.
    """
    response = read_wav(path)
    n_frames = len(response) // frame_length
    if n_frames == 0:
        raise EmptyRecordingError(
            f"{path.name} holds {len(response)} samples, less than one {frame_length}-sample frame"
        )
    if len(response) % frame_length:
        logger.warning(
            "Ignoring %d trailing samples of %s", len(response) % frame_length, path.name
        )
    blocks = response.samples[: n_frames * frame_length].reshape(n_frames, frame_length)
    if single_shot:
        if n_frames > 1:
            logger.warning("Single-shot: using the first of %d frames in %s", n_frames, path.name)
        blocks, mode = blocks[:1], MeasurementMode.single_shot
    elif n_frames < 2:
        raise EmptyRecordingError(
            f"{path.name} holds one frame; periodic mode discards the first frame and needs two "
            "(pass --single-shot for a zero-padded one-off recording)"
        )
    else:
        blocks, mode = blocks[1:], MeasurementMode.periodic
    frames = tuple(
        Signal(block, response.sample_rate, f"{path.name}:{i}") for i, block in enumerate(blocks)
    )
    periods = 1 if single_shot else n_frames
    return Recording(frames=frames, mode=mode, channel_digest="", periods=periods)


def compare_raw(
    original: Signal,
    sg: SafeguardedSignal,
    channel: ChannelModel,
    params: MeasureParams,
) -> RawComparison:
    """Same channel, same noise draws, no safeguarding and no denominator guard."""
    mode = MeasurementMode.single_shot if params.single_shot else MeasurementMode.periodic
    reference = noiseless_output(sg.stimulus, channel, mode)
    sigma = noise_sigma(channel, float(np.sqrt(np.mean(reference**2))))
    raw_channel = ChannelModel(
        ir=channel.ir,
        sample_rate=channel.sample_rate,
        noise_kind=channel.noise_kind,
        noise_sigma=sigma if channel.noise_kind == NoiseKind.white_gaussian else None,
        seed=channel.seed,
    )
    excitation = original.padded(sg.pad_len)
    recording = simulate(excitation, raw_channel, params)
    try:
        h_raw = deconvolve(average_frames(recording), excitation, 0.0)
    except UnsafeguardedDenominatorError as exc:
        logger.warning("Raw deconvolution refused: %s", exc.detail)
        return RawComparison(refused=exc.detail, refused_bin=exc.bin_index)
    except InvalidSignalError as exc:
        logger.warning("Raw deconvolution overflowed: %s", exc.detail)
        return RawComparison(refused=exc.detail)
    return RawComparison(h_est=h_raw.samples.tolist())


def _load_stimulus(path: Path) -> tuple[SafeguardedSignal, MetadataSidecar]:
    if not sidecar_path(path).exists():
        raise IntegrityError(
            f"{path.name} has no {sidecar_path(path).name}; run `safeguard prepare` on it first "
            "(an unsafeguarded original is only accepted through --compare-raw)"
        )
    return load_safeguarded(path)


def run(args: argparse.Namespace) -> int:
    config = run_config(
        args,
        channel=_channel_overrides(args),
        measure=given(periods=args.periods, single_shot=args.single_shot, min_mag=args.min_mag),
    )
    sg, sidecar = _load_stimulus(args.stimulus)
    channel = build_channel(config.channel, sg.stimulus.sample_rate)
    params = config.measure

    if args.response is not None:
        if args.compare_raw is not None:
            raise ParameterError("--compare-raw needs a simulated channel, not --response")
        recording = ingest_response(args.response, sg.frame_length, params.single_shot)
        ground_truth = None
    else:
        recording = simulate(sg, channel, params)
        ground_truth = channel.ir

    result = measure(recording, sg, ground_truth=ground_truth, min_mag=params.min_mag)

    source_path = Path(args.compare_raw or sidecar.source_file or "")
    raw = None
    if args.compare_raw is not None:
        original = read_wav(source_path)
        if original.digest != sidecar.source_digest:
            raise IntegrityError(f"{source_path.name} is not the source recorded in the sidecar")
        raw = compare_raw(original, sg, channel, params)

    document = ResultDocument(
        mode=result.mode,
        averaged_frames=result.averaged_frames,
        stimulus_digest=result.stimulus_digest,
        channel_digest=recording.channel_digest or None,
        sample_rate=result.h_est.sample_rate,
        h_est=result.h_est.samples.tolist(),
        h_true=ground_truth.tolist() if ground_truth is not None else None,
        raw=raw,
    )

    with open_session(session_dir(config, args)) as log:
        log_config(log, "measure", config)
        if args.response is not None:
            recording_path = args.response
        else:
            recording_path = log.directory / RECORDING_WAV
            frames = np.concatenate([frame.samples for frame in recording.frames])
            write_wav(Signal(frames, sg.stimulus.sample_rate, "recording"), recording_path)
        result_path = write_document(document, log.directory / RESULT_JSON)

        artifacts = {
            "result": result_path,
            "recording": recording_path,
            "stimulus": args.stimulus,
            "sidecar": sidecar_path(args.stimulus),
        }
        if source_path.is_file():
            artifacts["source"] = source_path
        else:
            logger.warning("Source %s not found; the report plots the stimulus only", source_path)
        for path in artifacts.values():
            log.record(EventKind.measure, artifact=path)
        log.record(
            EventKind.measure,
            payload={
                "artifacts": {role: log.artifact_name(path) for role, path in artifacts.items()},
                "mode": result.mode.value,
                "averaged_frames": result.averaged_frames,
            },
        )

    print(f"result: {result_path}")
    print(f"averaged frames: {result.averaged_frames} ({result.mode.value})")
    if ground_truth is not None:
        print(f"error: {ir_metrics(result.h_est, ground_truth).error_db:.2f} dB")
    if raw is not None and raw.h_est is not None and ground_truth is not None:
        h_raw = Signal(np.asarray(raw.h_est), result.h_est.sample_rate, "h_raw")
        print(f"raw error: {ir_metrics(h_raw, ground_truth).error_db:.2f} dB")
    elif raw is not None:
        print(f"raw: refused ({raw.refused})")
    return 0
