"""Edge-to-hub message format: newline-delimited JSON.

Each message is ``{"type", "message_id", "schema_version", "payload"}`` and
the hub answers ``{"ack": id}`` or ``{"err": id}``. Message ids are UUIDv5
over the type and canonical payload, so a re-sent or re-computed summary
carries the same id and the hub stores it once.
"""

from __future__ import annotations

import json
import uuid
from datetime import date, time
from typing import Annotated, Any, Final, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, NonNegativeInt, model_validator

from .core import DAYPARTS, DailySummary, DaypartStats, TripSummary

SCHEMA_VERSION: Final = 1
TRIP_SUMMARY: Final = "trip_summary"
DAILY_SUMMARY: Final = "daily_summary"
MESSAGE_TYPES: Final = (TRIP_SUMMARY, DAILY_SUMMARY)

_ID_NAMESPACE: Final = uuid.UUID("6f1c7a52-3d0e-5b7e-9a43-2c51d6a0e8f4")


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _round1(value: float | None) -> float | None:
    return None if value is None else round(value, 1)


def trip_summary_payload(s: TripSummary) -> dict[str, Any]:
    return {
        "trip_id": s.trip_id,
        "date": s.date.isoformat(),
        "start_time": s.start_time.isoformat(),
        "total_move": s.total_move,
        "total_stop": s.total_stop,
        "total_time_length": s.total_time_length,
    }


def daily_summary_payload(d: DailySummary) -> dict[str, Any]:
    payload: dict[str, Any] = {"date": d.date.isoformat()}
    for part in DAYPARTS:
        stats = d.daypart(part)
        payload[part.value] = {
            "avg_time_length": _round1(stats.avg_time_length),
            "avg_moves": _round1(stats.avg_moves),
            "avg_stops": _round1(stats.avg_stops),
            "trip_count": stats.trip_count,
        }
    return payload


def trip_summary_from_payload(p: dict[str, Any]) -> TripSummary:
    return TripSummary(
        trip_id=p["trip_id"],
        date=date.fromisoformat(p["date"]),
        start_time=time.fromisoformat(p["start_time"]),
        total_move=int(p["total_move"]),
        total_stop=int(p["total_stop"]),
        total_time_length=int(p["total_time_length"]),
    )


def daily_summary_from_payload(p: dict[str, Any]) -> DailySummary:
    parts = {part.value: DaypartStats(**p[part.value]) for part in DAYPARTS}
    return DailySummary(date=date.fromisoformat(p["date"]), **parts)


def message_id_for(msg_type: str, payload: dict[str, Any]) -> str:
    return str(uuid.uuid5(_ID_NAMESPACE, msg_type + canonical_json(payload)))


def make_message(msg_type: str, payload: dict[str, Any]) -> dict[str, Any]:
    return {
        "type": msg_type,
        "message_id": message_id_for(msg_type, payload),
        "schema_version": SCHEMA_VERSION,
        "payload": payload,
    }


def trip_message(s: TripSummary) -> dict[str, Any]:
    return make_message(TRIP_SUMMARY, trip_summary_payload(s))


def daily_message(d: DailySummary) -> dict[str, Any]:
    return make_message(DAILY_SUMMARY, daily_summary_payload(d))


def encode(message: dict[str, Any]) -> bytes:
    return canonical_json(message).encode("utf-8") + b"\n"


def canonicalize(messages: list[dict[str, Any]]) -> str:
    """Id-free canonical text of a message sequence, for equality checks."""
    lines = [
        canonical_json({k: v for k, v in m.items() if k != "message_id"}) for m in messages
    ]
    return "\n".join(lines) + ("\n" if lines else "")


# -- validation models -------------------------------------------------------


class TripSummaryPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    trip_id: str
    date: date
    start_time: time
    total_move: NonNegativeInt
    total_stop: NonNegativeInt
    total_time_length: NonNegativeInt


class DaypartPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    avg_time_length: Optional[float] = None
    avg_moves: Optional[float] = None
    avg_stops: Optional[float] = None
    trip_count: NonNegativeInt = 0

    @model_validator(mode="after")
    def _blank_iff_empty(self) -> "DaypartPayload":
        averages = (self.avg_time_length, self.avg_moves, self.avg_stops)
        if self.trip_count == 0:
            if any(a is not None for a in averages):
                raise ValueError("averages must be null when trip_count is 0")
        elif any(a is None for a in averages):
            raise ValueError("averages required when trip_count > 0")
        return self


class DailySummaryPayload(BaseModel):
    model_config = ConfigDict(extra="forbid")

    date: date
    morning: DaypartPayload
    afternoon: DaypartPayload
    evening: DaypartPayload


class _MessageBase(BaseModel):
    message_id: uuid.UUID
    schema_version: Literal[1]


class TripSummaryMessage(_MessageBase):
    type: Literal["trip_summary"]
    payload: TripSummaryPayload


class DailySummaryMessage(_MessageBase):
    type: Literal["daily_summary"]
    payload: DailySummaryPayload


Message = Annotated[Union[TripSummaryMessage, DailySummaryMessage], Field(discriminator="type")]


class Ack(BaseModel):
    ack: str


class Nack(BaseModel):
    err: str
