"""Helpers shared by the subcommands: run-config assembly and session bookkeeping."""

import argparse
from pathlib import Path

from src.config import load_run_config, resolve_out_dir
from src.models import EventKind
from src.schemas import RunConfig
from src.session import SessionLog


def given(**values) -> dict:
    """Only the flags the user actually set, so they override the config file and nothing else."""
    return {key: value for key, value in values.items() if value is not None}


def run_config(args: argparse.Namespace, **sections: dict) -> RunConfig:
    overrides = {name: values for name, values in sections.items() if values}
    overrides.update(given(out_dir=args.out_dir, format=getattr(args, "format", None)))
    return load_run_config(args.config, overrides)


def session_dir(config: RunConfig, args: argparse.Namespace) -> Path:
    return resolve_out_dir(config, args.out_dir)


def log_config(log: SessionLog, command: str, config: RunConfig) -> None:
    log.record(
        EventKind.config,
        payload={"command": command, "config": config.model_dump(mode="json")},
    )


def format_sdr(sdr_db: float | None, state: str) -> str:
    return f"{sdr_db:.2f} dB" if sdr_db is not None else state
