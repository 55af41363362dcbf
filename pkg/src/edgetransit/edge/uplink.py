"""Store-and-forward delivery of summaries to the hub.

Messages wait in a bounded FIFO until the hub acknowledges them. A single
worker thread owns the connection, sends the head of the queue, and on any
failure reconnects with exponential backoff. When the queue is full the
oldest message is evicted: recent state matters more to a transit monitor.
"""

from __future__ import annotations

import json
import logging
import socket
import threading
from collections import deque
from typing import Any

from ..wire import encode

log = logging.getLogger(__name__)


class MemorySink:
    """Collects messages in-process; stands in for the uplink in tests and batch runs."""

    def __init__(self) -> None:
        self.messages: list[dict[str, Any]] = []
        self.evicted = 0

    def send(self, message: dict[str, Any]) -> None:
        self.messages.append(message)

    @property
    def sent(self) -> int:
        return len(self.messages)

    @property
    def pending(self) -> int:
        return 0

    def close(self, timeout: float | None = None) -> bool:
        return True


class Uplink:
    def __init__(
        self,
        host: str,
        port: int,
        *,
        capacity: int = 10_000,
        backoff_base_s: float = 1.0,
        backoff_cap_s: float = 60.0,
        io_timeout_s: float = 10.0,
    ) -> None:
        self.address = (host, port)
        self.capacity = capacity
        self.backoff_base_s = backoff_base_s
        self.backoff_cap_s = backoff_cap_s
        self.io_timeout_s = io_timeout_s
        self.sent = 0
        self.rejected = 0
        self.evicted = 0
        self.retries = 0
        self._buffer: deque[dict[str, Any]] = deque()
        self._cond = threading.Condition()
        self._closing = False
        self._abort = False
        self._sock: socket.socket | None = None
        self._reader = None
        self._thread = threading.Thread(target=self._run, name="uplink", daemon=True)
        self._thread.start()

    @property
    def pending(self) -> int:
        with self._cond:
            return len(self._buffer)

    def send(self, message: dict[str, Any]) -> None:
        """Queue a message for delivery; evicts the oldest when at capacity."""
        with self._cond:
            if self._closing:
                raise RuntimeError("uplink is closed")
            if len(self._buffer) >= self.capacity:
                dropped = self._buffer.popleft()
                self.evicted += 1
                log.warning("uplink buffer full, evicted %s", dropped["message_id"])
            self._buffer.append(message)
            self._cond.notify_all()

    def flush(self, timeout: float | None = None) -> bool:
        """Block until every queued message is acknowledged or ``timeout`` passes."""
        with self._cond:
            return self._cond.wait_for(lambda: not self._buffer, timeout)

    def close(self, timeout: float | None = None) -> bool:
        """Drain for up to ``timeout`` seconds, then stop. True if nothing is left."""
        with self._cond:
            self._closing = True
            drained = self._cond.wait_for(lambda: not self._buffer, timeout)
            self._abort = True
            self._cond.notify_all()
        self._thread.join()
        self._disconnect()
        return drained

    # worker side

    def _connect(self) -> None:
        sock = socket.create_connection(self.address, timeout=self.io_timeout_s)
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._sock = sock
        self._reader = sock.makefile("rb")

    def _disconnect(self) -> None:
        if self._reader is not None:
            self._reader.close()
            self._reader = None
        if self._sock is not None:
            self._sock.close()
            self._sock = None

    def _deliver(self, message: dict[str, Any]) -> dict[str, Any]:
        if self._sock is None:
            self._connect()
        self._sock.sendall(encode(message))
        while True:
            line = self._reader.readline()
            if not line:
                raise ConnectionError("hub closed the connection")
            reply = json.loads(line)
            ref = reply.get("ack", reply.get("err"))
            if ref == message["message_id"]:
                return reply
            # a reply to an earlier attempt that timed out; skip it
            log.debug("ignoring stale reply %s", reply)

    def _run(self) -> None:
        failures = 0
        while True:
            with self._cond:
                self._cond.wait_for(lambda: self._buffer or self._abort)
                if self._abort:
                    return
                message = self._buffer[0]
            try:
                reply = self._deliver(message)
            except (OSError, ValueError) as exc:
                self._disconnect()
                self.retries += 1
                delay = min(self.backoff_cap_s, self.backoff_base_s * 2**failures)
                failures += 1
                log.info("uplink to %s:%s failed (%s); retry in %.2fs", *self.address, exc, delay)
                with self._cond:
                    self._cond.wait_for(lambda: self._abort, delay)
                continue
            failures = 0
            with self._cond:
                if self._buffer and self._buffer[0] is message:
                    self._buffer.popleft()
                if "ack" in reply:
                    self.sent += 1
                else:
                    self.rejected += 1
                    log.error("hub rejected message %s", message["message_id"])
                self._cond.notify_all()
