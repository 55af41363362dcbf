"""Append-only message log: one NDJSON file per business date.

A record is the canonical JSON of an accepted message. Nothing is ever
rewritten; the in-memory id index is rebuilt by scanning on open. A torn
final line (crash mid-write) is truncated away before appending resumes.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from collections.abc import Iterator
from datetime import date
from pathlib import Path
from typing import Any, BinaryIO

from ..wire import canonical_json

log = logging.getLogger(__name__)

SUFFIX = ".ndjson"


def _log_files(data_dir: Path) -> list[tuple[date, Path]]:
    files = []
    for path in data_dir.glob("*" + SUFFIX):
        try:
            files.append((date.fromisoformat(path.stem), path))
        except ValueError:
            log.warning("ignoring stray file %s", path)
    return sorted(files)


def _iter_lines(path: Path, limit: int | None = None) -> Iterator[dict[str, Any]]:
    with open(path, "rb") as fh:
        data = fh.read() if limit is None else fh.read(limit)
    for lineno, line in enumerate(data.split(b"\n"), start=1):
        if not line:
            continue
        try:
            yield json.loads(line)
        except ValueError:
            log.warning("%s:%d: unreadable record skipped", path, lineno)


def read_records(
    data_dir: str | Path, start: date | None = None, end: date | None = None
) -> list[dict[str, Any]]:
    """All persisted messages with business dates in ``[start, end]``, in log order."""
    records = []
    for day, path in _log_files(Path(data_dir)):
        if (start is None or day >= start) and (end is None or day <= end):
            records.extend(_iter_lines(path))
    return records


class MessageLog:
    """Deduplicating append-only store; safe for concurrent writers."""

    def __init__(self, data_dir: str | Path, *, fsync: bool = True) -> None:
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.fsync = fsync
        self._lock = threading.Lock()
        self._ids: set[str] = set()
        self._handles: dict[date, BinaryIO] = {}
        self._sizes: dict[date, int] = {}
        for day, path in _log_files(self.data_dir):
            self._repair_tail(path)
            self._sizes[day] = path.stat().st_size
            for record in _iter_lines(path):
                self._ids.add(record["message_id"])

    @staticmethod
    def _repair_tail(path: Path) -> None:
        data = path.read_bytes()
        if data and not data.endswith(b"\n"):
            keep = data.rfind(b"\n") + 1
            log.warning("%s: truncating torn record (%d bytes)", path, len(data) - keep)
            with open(path, "r+b") as fh:
                fh.truncate(keep)

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, message_id: str) -> bool:
        return message_id in self._ids

    def append(self, message: dict[str, Any]) -> bool:
        """Persist ``message`` unless its id is already stored. True if written."""
        line = canonical_json(message).encode("utf-8") + b"\n"
        day = date.fromisoformat(message["payload"]["date"])
        with self._lock:
            if message["message_id"] in self._ids:
                return False
            fh = self._handles.get(day)
            if fh is None:
                fh = open(self.data_dir / f"{day.isoformat()}{SUFFIX}", "ab")
                self._handles[day] = fh
            fh.write(line)
            fh.flush()
            if self.fsync:
                os.fsync(fh.fileno())
            self._sizes[day] = self._sizes.get(day, 0) + len(line)
            self._ids.add(message["message_id"])
            return True

    def snapshot(
        self, start: date | None = None, end: date | None = None
    ) -> list[dict[str, Any]]:
        """Records as of now; later appends are not visible in the result."""
        with self._lock:
            sizes = dict(self._sizes)
        records = []
        for day in sorted(sizes):
            if (start is None or day >= start) and (end is None or day <= end):
                path = self.data_dir / f"{day.isoformat()}{SUFFIX}"
                records.extend(_iter_lines(path, sizes[day]))
        return records

    def close(self) -> None:
        with self._lock:
            for fh in self._handles.values():
                fh.close()
            self._handles.clear()
