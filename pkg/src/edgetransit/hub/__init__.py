"""Hub side: durable message log, NDJSON listener, HTTP API and reports."""

from __future__ import annotations

from .reports import build_report, detect_missing_trips, load_schedule
from .service import HubServer, HubService
from .store import MessageLog, read_records

__all__ = [
    "HubServer",
    "HubService",
    "MessageLog",
    "build_report",
    "detect_missing_trips",
    "load_schedule",
    "read_records",
]
