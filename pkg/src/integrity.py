import hashlib
import json
from pathlib import Path

from src.errors import AudioIOError, IntegrityError

_CHUNK = 1 << 20


def file_digest(path: Path) -> str:
    """SHA-256 of a file's bytes, hex encoded."""
    h = hashlib.sha256()
    try:
        with open(path, "rb") as fh:
            while chunk := fh.read(_CHUNK):
                h.update(chunk)
    except OSError as exc:
        raise AudioIOError(f"Cannot read {path}: {exc}") from exc
    return h.hexdigest()


def payload_digest(payload: dict) -> str:
    return hashlib.sha256(
        json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def verify_file(path: Path, expected: str, source: str) -> None:
    """Raise IntegrityError unless the file hashes to `expected`, as recorded in `source`."""
    actual = file_digest(path)
    if actual != expected:
        raise IntegrityError(
            f"{Path(path).name} does not match its digest in {source}: "
            f"expected {expected[:12]}, got {actual[:12]}"
        )
