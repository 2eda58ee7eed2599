from datetime import datetime
from pathlib import Path

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.errors import AudioIOError, ParameterError
from src.schemas import RunConfig


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="SAFEGUARD_", env_file=".env", extra="ignore")

    log_level: str = "INFO"

    out_dir: Path = Path("sessions")
    default_format: str = "float32"

    # Pins every session-log timestamp; makes full CLI runs byte-reproducible
    fixed_clock: datetime | None = None


settings = Settings()


def load_run_config(path: Path | None = None, overrides: dict | None = None) -> RunConfig:
    """RunConfig from an optional JSON file, then explicit flag values on top.

    `overrides` is nested by section ({"safeguard": {...}, "channel": {...}, ...}); only keys
    actually given on the command line should be present.
    """
    if path is not None:
        try:
            config = RunConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise AudioIOError(f"Cannot read config {path}: {exc}") from exc
        except ValidationError as exc:
            raise ParameterError(f"Invalid config {path}: {exc}") from exc
    else:
        config = RunConfig(format=settings.default_format)

    update_data = config.model_dump()
    for key, value in (overrides or {}).items():
        if isinstance(value, dict):
            update_data[key].update(value)
        else:
            update_data[key] = value
    try:
        return RunConfig.model_validate(update_data)
    except ValidationError as exc:
        raise ParameterError(f"Invalid arguments: {exc}") from exc


def resolve_out_dir(config: RunConfig, flag: Path | None = None) -> Path:
    return Path(flag or config.out_dir or settings.out_dir)
