"""Shared test helpers: fixture runs, hub stubs and a lossy proxy."""

from __future__ import annotations

import socket
import threading
import time
from collections.abc import Iterator, Sequence
from contextlib import contextmanager
from pathlib import Path

from edgetransit.core import CSV_COLUMNS
from edgetransit.edge import EdgeConfig, MemorySink, run_pipeline
from edgetransit.edge.ingest import ingest_replay
from edgetransit.fixtures import Fixture, FixtureSpec, generate_fixture, write_csv
from edgetransit.wire import canonicalize


# criterion number -> one-line verdict, printed in the terminal summary
VERDICTS: dict[int, str] = {}


@contextmanager
def criterion(number: int, title: str) -> Iterator[list[str]]:
    """Record PASS or FAIL for an acceptance criterion.

    The body may append short measurements to the yielded list; they are
    shown after the verdict.
    """
    details: list[str] = []
    try:
        yield details
    except BaseException as exc:
        reason = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        line = f"FAIL  criterion {number:>2}: {title} ({reason})"
        VERDICTS[number] = line
        print(line)
        raise
    line = f"PASS  criterion {number:>2}: {title}" + (f" [{'; '.join(details)}]" if details else "")
    VERDICTS[number] = line
    print(line)


def records(rows: Sequence[Sequence[str]]) -> list[dict[str, str]]:
    return [dict(zip(CSV_COLUMNS, r)) for r in rows if len(r) == len(CSV_COLUMNS)]


def run_rows(rows: Sequence[Sequence[str]], config: EdgeConfig | None = None):
    sink = MemorySink()
    result = run_pipeline(config or EdgeConfig(), records(rows), sink)
    return sink.messages, result


def run_file(path: str | Path, config: EdgeConfig | None = None):
    sink = MemorySink()
    result = run_pipeline(config or EdgeConfig(), ingest_replay(path), sink)
    return sink.messages, result


def same(a, b) -> bool:
    return canonicalize(a) == canonicalize(b)


def fixture(**kwargs) -> Fixture:
    return generate_fixture(FixtureSpec(**kwargs))


def write_fixture(tmp_path: Path, fx: Fixture, name: str = "avl.csv") -> Path:
    path = tmp_path / name
    write_csv(path, fx.rows, fx.header)
    return path


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def wait_until(predicate, timeout: float = 10.0, step: float = 0.01) -> bool:
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        if predicate():
            return True
        time.sleep(step)
    return predicate()


class FlakyProxy:
    """TCP relay that, for the first ``drop_acks`` replies, swallows the ack
    and cuts the connection, forcing the sender to retransmit."""

    def __init__(self, upstream: tuple[str, int], drop_acks: int) -> None:
        self.upstream = upstream
        self.remaining = drop_acks
        self.swallowed = 0
        self._lock = threading.Lock()
        self._listener = socket.create_server(("127.0.0.1", 0))
        self._listener.settimeout(0.2)
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._accept, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self._listener.getsockname()[:2]

    def start(self) -> FlakyProxy:
        self._thread.start()
        return self

    def stop(self) -> None:
        self._stop.set()
        self._thread.join()
        self._listener.close()

    def _accept(self) -> None:
        while not self._stop.is_set():
            try:
                client, _ = self._listener.accept()
            except socket.timeout:
                continue
            threading.Thread(target=self._relay, args=(client,), daemon=True).start()

    def _take_drop(self) -> bool:
        with self._lock:
            if self.remaining > 0:
                self.remaining -= 1
                self.swallowed += 1
                return True
            return False

    def _relay(self, client: socket.socket) -> None:
        try:
            upstream = socket.create_connection(self.upstream)
        except OSError:
            client.close()
            return
        down = client.makefile("rb")
        up = upstream.makefile("rb")
        try:
            for line in down:
                upstream.sendall(line)
                reply = up.readline()
                if not reply:
                    break
                if self._take_drop():
                    break  # the hub has persisted it, the edge never hears so
                client.sendall(reply)
        except OSError:
            pass
        finally:
            for f in (down, up, client, upstream):
                f.close()
