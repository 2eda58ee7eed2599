"""`safeguard generate`: write a deterministic test sound or a random FIR channel."""

import argparse
from pathlib import Path

from src.audio_io import write_wav
from src.models import Signal, WavFormat
from src.testsignals import GENERATORS, random_taps


def add_parser(subparsers, parent: argparse.ArgumentParser) -> None:
    p = subparsers.add_parser(
        "generate",
        parents=[parent],
        help="write a synthetic test sound",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    p.add_argument("kind", choices=[*GENERATORS, "channel"])
    p.add_argument("output", type=Path)
    p.add_argument("--length", type=int, default=16000, help="samples (taps for 'channel')")
    p.add_argument("--rate", type=int, default=16000, help="sample rate in Hz")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=[f.value for f in WavFormat], default="float32")
    p.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if args.kind == "channel":
        # Taps may exceed full scale, so channels are always float
        signal = Signal(random_taps(args.length, args.seed), args.rate, "channel")
        fmt = WavFormat.float32
    else:
        signal = GENERATORS[args.kind](args.length, args.rate, args.seed)
        fmt = WavFormat(args.format)
    write_wav(signal, args.output, fmt)
    print(f"{args.kind}: {args.output} ({len(signal)} samples @ {args.rate} Hz, {fmt.value})")
    return 0
