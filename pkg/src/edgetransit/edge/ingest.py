"""Tuple sources: paced replay of an AVL CSV file, or a line-oriented socket."""

from __future__ import annotations

import csv
import logging
import queue
import socketserver
import threading
import time
from collections.abc import Iterator
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from ..core import CSV_COLUMNS, parse_timestamp

log = logging.getLogger(__name__)


@dataclass
class IngestStats:
    records: int = 0
    malformed: int = 0
    partial_lines: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def bump(self, name: str) -> None:
        with self._lock:
            setattr(self, name, getattr(self, name) + 1)


@dataclass(frozen=True, slots=True)
class Tick:
    """Wall-clock heartbeat from a live source with no data pending."""

    now: datetime


def ingest_replay(
    path: str | Path,
    speed: float = 0.0,
    stats: IngestStats | None = None,
    *,
    sleep=time.sleep,
    clock=time.monotonic,
) -> Iterator[dict[str, str]]:
    """Replay an AVL CSV file as raw records.

    Rows are released at their recorded spacing divided by ``speed``;
    ``speed == 0`` means as fast as possible. Rows whose cell count does not
    match the header are skipped and counted. The file is opened eagerly so
    an unreadable path fails here rather than on first iteration.
    """
    if speed < 0:
        raise ValueError("speed must be >= 0")
    fh = open(path, newline="", encoding="utf-8")
    try:
        reader = csv.reader(fh)
        header = next(reader, None)
    except Exception:
        fh.close()
        raise
    if header is None:
        fh.close()
        raise ValueError(f"{path}: empty file, header row expected")
    stats = stats if stats is not None else IngestStats()
    return _replay_rows(fh, reader, header, speed, stats, sleep, clock)


def _replay_rows(fh, reader, header, speed, stats, sleep, clock):
    width = len(header)
    origin_wall = None
    origin_ts = None
    with fh:
        for row in reader:
            if len(row) != width:
                stats.bump("malformed")
                continue
            record = dict(zip(header, row))
            if speed > 0:
                try:
                    ts = parse_timestamp(record.get("timestamp", ""))
                except ValueError:
                    ts = None
                if ts is not None:
                    if origin_ts is None:
                        origin_ts, origin_wall = ts, clock()
                    due = origin_wall + (ts - origin_ts).total_seconds() / speed
                    delay = due - clock()
                    if delay > 0:
                        sleep(delay)
            stats.records += 1
            yield record


def parse_socket_line(line: str) -> dict[str, str] | None:
    """One header-less CSV row in canonical column order, or None if malformed."""
    try:
        rows = list(csv.reader([line]))
    except csv.Error:
        return None
    if len(rows) != 1 or len(rows[0]) != len(CSV_COLUMNS):
        return None
    return dict(zip(CSV_COLUMNS, rows[0]))


class _LineHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        owner: SocketIngest = self.server.owner
        for raw in self.rfile:
            if not raw.endswith(b"\n"):
                owner.stats.bump("partial_lines")
                log.debug("discarding partial line from %s", self.client_address)
                break
            try:
                line = raw.decode("utf-8").rstrip("\r\n")
            except UnicodeDecodeError:
                owner.stats.bump("malformed")
                continue
            if not line:
                continue
            record = parse_socket_line(line)
            if record is None:
                owner.stats.bump("malformed")
                continue
            owner.stats.bump("records")
            owner.queue.put(record)  # blocks when processing falls behind


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class SocketIngest:
    """Accepts newline-delimited CSV rows from any number of peers.

    Iterating yields raw records in per-connection order, interleaved with
    :class:`Tick` heartbeats whenever nothing arrives for ``tick_s``.
    """

    def __init__(
        self, host: str, port: int, *, maxsize: int = 10_000, tick_s: float = 1.0
    ) -> None:
        self.stats = IngestStats()
        self.queue: queue.Queue = queue.Queue(maxsize)
        self.tick_s = tick_s
        self._server = _Server((host, port), _LineHandler)
        self._server.owner = self
        self._thread: threading.Thread | None = None
        self._stopped = threading.Event()

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> SocketIngest:
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        if self._stopped.is_set():
            return
        self._stopped.set()
        self._server.shutdown()
        self._server.server_close()

    def __enter__(self) -> SocketIngest:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()

    def __iter__(self) -> Iterator[dict[str, str] | Tick]:
        while True:
            try:
                yield self.queue.get(timeout=self.tick_s)
            except queue.Empty:
                if self._stopped.is_set():
                    return
                yield Tick(datetime.now(timezone.utc))


def ingest_socket(host: str, port: int, **kwargs) -> SocketIngest:
    return SocketIngest(host, port, **kwargs).start()
