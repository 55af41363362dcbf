"""Message intake shared by the socket listener and the HTTP API."""

from __future__ import annotations

import json
import logging
import socket
import socketserver
import threading
from pathlib import Path
from typing import Any

from pydantic import TypeAdapter, ValidationError

from ..wire import MESSAGE_TYPES, Message, encode
from .store import MessageLog

log = logging.getLogger(__name__)

_message_adapter: TypeAdapter = TypeAdapter(Message)


class HubService:
    def __init__(self, data_dir: str | Path, *, fsync: bool = True) -> None:
        self.log = MessageLog(data_dir, fsync=fsync)
        self.received = 0
        self.duplicates = 0
        self.malformed = 0
        self.rejected = 0
        self._lock = threading.Lock()

    def _count(self, name: str) -> None:
        with self._lock:
            setattr(self, name, getattr(self, name) + 1)

    def handle(self, message: Any) -> dict[str, str] | None:
        """Validate and persist one decoded message.

        Returns the reply to send back, or None when the input carries no
        usable message_id and cannot be answered at all.
        """
        if not isinstance(message, dict) or not isinstance(message.get("message_id"), str):
            self._count("malformed")
            log.warning("dropping message without message_id: %.200r", message)
            return None
        message_id = message["message_id"]
        if message.get("type") not in MESSAGE_TYPES:
            self._count("rejected")
            log.warning("unknown message type %r (%s)", message.get("type"), message_id)
            return {"err": message_id}
        try:
            _message_adapter.validate_python(message)
        except ValidationError as exc:
            self._count("rejected")
            log.warning("invalid %s %s: %s", message["type"], message_id, exc.errors()[:3])
            return {"err": message_id}
        self._count("received")
        if not self.log.append(message):
            self._count("duplicates")
        return {"ack": message_id}

    def handle_line(self, line: bytes | str) -> dict[str, str] | None:
        try:
            message = json.loads(line)
        except ValueError:
            self._count("malformed")
            log.warning("skipping unparseable line: %.200r", line)
            return None
        return self.handle(message)

    def close(self) -> None:
        self.log.close()


class _Handler(socketserver.StreamRequestHandler):
    def setup(self) -> None:
        super().setup()
        with self.server.conn_lock:
            self.server.connections.add(self.request)

    def finish(self) -> None:
        with self.server.conn_lock:
            self.server.connections.discard(self.request)
        try:
            super().finish()
        except OSError:
            pass

    def handle(self) -> None:
        service: HubService = self.server.service
        for raw in self.rfile:
            if not raw.endswith(b"\n"):
                log.debug("discarding partial line from %s", self.client_address)
                break
            if not raw.strip():
                continue
            reply = service.handle_line(raw)
            if reply is not None:
                try:
                    self.wfile.write(encode(reply))
                    self.wfile.flush()
                except OSError:
                    break


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class HubServer:
    """Threaded NDJSON listener; one thread per edge connection."""

    def __init__(self, service: HubService, host: str = "127.0.0.1", port: int = 0) -> None:
        self.service = service
        self._server = _Server((host, port), _Handler)
        self._server.service = service
        self._server.connections = set()
        self._server.conn_lock = threading.Lock()
        self._thread: threading.Thread | None = None

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def start(self) -> HubServer:
        self._thread = threading.Thread(target=self._server.serve_forever, name="hub", daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def stop(self) -> None:
        """Stop accepting and sever every open edge connection."""
        self._server.shutdown()
        self._server.server_close()
        with self._server.conn_lock:
            for conn in list(self._server.connections):
                try:
                    conn.shutdown(socket.SHUT_RDWR)
                except OSError:
                    pass

    def __enter__(self) -> HubServer:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()
