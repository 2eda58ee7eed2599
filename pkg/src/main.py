import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from src import __version__
from src.commands import generate, measure, prepare, report, verify
from src.config import settings
from src.errors import ExitCode, SafeguardError

logger = logging.getLogger("safeguard")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration; flags override it")
    common.add_argument(
        "--out-dir", type=Path, help="session directory (default: $SAFEGUARD_OUT_DIR or sessions)"
    )
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(
        prog="safeguard",
        description=(
            "Safeguard arbitrary sounds for impulse response measurement: "
            "prepare -> measure -> report."
        ),
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (prepare, measure, report, verify, generate):
        command.add_parser(subparsers, common)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else settings.log_level,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except SafeguardError as exc:
        logger.error("%s: %s", type(exc).__name__, exc.detail)
        return int(exc.exit_code)
    except ValidationError as exc:
        logger.error("Invalid configuration: %s", exc)
        return int(ExitCode.BAD_ARGUMENTS)


if __name__ == "__main__":
    sys.exit(main())
