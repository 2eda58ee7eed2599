import hashlib
import logging
from collections.abc import Iterator
from contextlib import contextmanager
from datetime import datetime, timezone

UTC = timezone.utc
from pathlib import Path

from src.config import settings
from src.errors import AudioIOError, IncompleteSessionError
from src.integrity import file_digest, payload_digest, verify_file
from src.models import EventKind
from src.schemas import LogEntry

logger = logging.getLogger(__name__)

LOG_FILE = "session.log.jsonl"


def utc_now() -> datetime:
    if settings.fixed_clock is not None:
        clock = settings.fixed_clock
        return clock if clock.tzinfo else clock.replace(tzinfo=UTC)
    return datetime.now(UTC)


class SessionLog:
    """Append-only, time-stamped record of a measurement session (session.log.jsonl).

    Every entry carries a digest: of its artifact file when it names one, otherwise of its
    payload. Timestamps never go backwards.
    """

    def __init__(self, directory: Path, entries: list[LogEntry] | None = None):
        self.directory = Path(directory)
        self.entries: list[LogEntry] = list(entries or [])

    @property
    def path(self) -> Path:
        return self.directory / LOG_FILE

    @property
    def session_id(self) -> str:
        if not self.entries:
            return ""
        return hashlib.sha256(self.entries[0].digest.encode()).hexdigest()[:16]

    @classmethod
    def load(cls, directory: Path) -> "SessionLog":
        directory = Path(directory)
        log_path = directory / LOG_FILE
        if not log_path.exists():
            return cls(directory)
        try:
            lines = log_path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise AudioIOError(f"Cannot read session log {log_path}: {exc}") from exc
        return cls(directory, [LogEntry.model_validate_json(line) for line in lines if line])

    def artifact_name(self, path: Path) -> str:
        path = Path(path).resolve()
        try:
            return path.relative_to(self.directory.resolve()).as_posix()
        except ValueError:
            return str(path)

    def artifact_path(self, name: str) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.directory / path

    def record(
        self,
        kind: EventKind,
        *,
        payload: dict | None = None,
        artifact: Path | None = None,
        timestamp: datetime | None = None,
    ) -> LogEntry:
        timestamp = timestamp or utc_now()
        if self.entries and timestamp < self.entries[-1].timestamp:
            timestamp = self.entries[-1].timestamp
        if artifact is not None:
            digest = file_digest(artifact)
            name = self.artifact_name(artifact)
        else:
            digest = payload_digest(payload or {})
            name = None
        entry = LogEntry(
            timestamp=timestamp, kind=kind, digest=digest, artifact=name, payload=payload
        )
        try:
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(entry.model_dump_json() + "\n")
        except OSError as exc:
            raise AudioIOError(f"Cannot append to session log {self.path}: {exc}") from exc
        self.entries.append(entry)
        logger.debug("Logged %s %s", kind.value, name or digest[:12])
        return entry

    def latest(self, kind: EventKind) -> LogEntry | None:
        for entry in reversed(self.entries):
            if entry.kind == kind:
                return entry
        return None

    def latest_artifact(self, name: str) -> LogEntry | None:
        for entry in reversed(self.entries):
            if entry.artifact == name:
                return entry
        return None

    def resolve(self, names: list[str]) -> dict[str, Path]:
        """Map artifact names to paths, checking each file against its latest logged digest."""
        missing, resolved = [], {}
        for name in names:
            entry = self.latest_artifact(name)
            path = self.artifact_path(name)
            if entry is None or not path.exists():
                missing.append(name)
                continue
            verify_file(path, entry.digest, LOG_FILE)
            resolved[name] = path
        if missing:
            raise IncompleteSessionError(missing)
        return resolved


@contextmanager
def open_session(directory: Path) -> Iterator[SessionLog]:
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise AudioIOError(f"Cannot create session directory {directory}: {exc}") from exc
    log = SessionLog.load(directory)
    try:
        yield log
    finally:
        logger.debug("Session %s: %d entries", log.session_id or "(empty)", len(log.entries))
