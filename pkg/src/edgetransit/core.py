"""Domain types, great-circle geodesy and the move/stop classifier."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from datetime import date, datetime, time, timezone
from typing import Final

EARTH_RADIUS_M: Final = 6_371_000.0
STOP_MOVE_THRESHOLD_M: Final = 15.0
CADENCE_S: Final = 5

# Sentinel written into non-critical fields that arrived empty or unusable.
NA: Final = "N/A"

# Canonical tuple schema, in serialized order. ``position`` is one field that
# travels as two CSV columns (latitude, longitude).
FIELD_NAMES: Final = (
    "timestamp",
    "position",
    "route_name",
    "trip_id",
    "trip_date",
    "trip_start_time",
    "trip_finish_time",
    "vehicle_id",
    "driver_id",
    "heading",
    "speed",
    "odometer",
    "door_status",
    "occupancy",
    "delay_seconds",
    "next_stop_id",
    "schedule_adherence",
)

CSV_COLUMNS: Final = (
    "timestamp",
    "latitude",
    "longitude",
    *FIELD_NAMES[2:],
)

CRITICAL_FIELDS: Final = frozenset(
    {"timestamp", "position", "route_name", "trip_id", "trip_date", "trip_start_time"}
)

DOOR_STATUSES: Final = ("open", "closed")
ADHERENCE_VALUES: Final = ("early", "on_time", "late")


class CoordinateError(ValueError):
    """Raised for latitude/longitude outside their legal ranges."""


@dataclass(frozen=True, slots=True)
class GeoPoint:
    latitude: float
    longitude: float

    def __post_init__(self) -> None:
        if not -90.0 <= self.latitude <= 90.0:
            raise CoordinateError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise CoordinateError(f"longitude out of range: {self.longitude}")


@dataclass(frozen=True, slots=True)
class AvlTuple:
    """One cleaned telemetry record.

    The six critical fields are always real values. Every other field holds
    either a parsed value or the ``NA`` sentinel.
    """

    timestamp: datetime
    position: GeoPoint
    route_name: str
    trip_id: str
    trip_date: date
    trip_start_time: time
    trip_finish_time: time | str
    vehicle_id: str
    driver_id: str
    heading: float | str
    speed: float | str
    odometer: float | str
    door_status: str
    occupancy: int | str
    delay_seconds: int | str
    next_stop_id: str
    schedule_adherence: str


class MotionLabel(str, enum.Enum):
    MOVE = "Move"
    STOP = "Stop"


@dataclass(frozen=True, slots=True)
class MotionAnnotation:
    tuple_timestamp: datetime
    label: MotionLabel


@dataclass(frozen=True, slots=True)
class TripSummary:
    trip_id: str
    date: date
    start_time: time
    total_move: int
    total_stop: int
    total_time_length: int


class Daypart(str, enum.Enum):
    MORNING = "morning"
    AFTERNOON = "afternoon"
    EVENING = "evening"
    NONE = "none"


DAYPARTS: Final = (Daypart.MORNING, Daypart.AFTERNOON, Daypart.EVENING)


@dataclass(frozen=True, slots=True)
class DaypartStats:
    avg_time_length: float | None = None
    avg_moves: float | None = None
    avg_stops: float | None = None
    trip_count: int = 0


@dataclass(frozen=True, slots=True)
class DailySummary:
    date: date
    morning: DaypartStats
    afternoon: DaypartStats
    evening: DaypartStats

    def daypart(self, part: Daypart) -> DaypartStats:
        return getattr(self, part.value)


def great_circle_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Haversine distance in meters on a sphere of mean Earth radius."""
    lat1 = math.radians(a.latitude)
    lat2 = math.radians(b.latitude)
    dlat = math.radians(b.latitude - a.latitude)
    dlon = math.radians(b.longitude - a.longitude)
    h = math.sin(dlat / 2) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2) ** 2
    # h can drift a hair above 1 for antipodal points
    return 2 * EARTH_RADIUS_M * math.asin(math.sqrt(min(1.0, h)))


def classify_motion(
    previous: GeoPoint, current: GeoPoint, threshold_m: float = STOP_MOVE_THRESHOLD_M
) -> MotionLabel:
    """Stop when the displacement is strictly under the threshold, else Move.

    The distance is compared at micrometre resolution; haversine round-off is
    below 1e-9 m, so a pair built at exactly the threshold lands on Move.
    """
    if round(great_circle_distance(previous, current), 6) < threshold_m:
        return MotionLabel.STOP
    return MotionLabel.MOVE


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 instant into an aware UTC datetime (1 s resolution)."""
    text = text.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        raise ValueError(f"timestamp lacks a UTC offset: {text!r}")
    return dt.astimezone(timezone.utc).replace(microsecond=0)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_time_of_day(text: str) -> time:
    text = text.strip()
    parts = text.split(":")
    if len(parts) not in (2, 3) or not all(p.isdigit() for p in parts):
        raise ValueError(f"bad time of day: {text!r}")
    hour, minute = int(parts[0]), int(parts[1])
    second = int(parts[2]) if len(parts) == 3 else 0
    return time(hour, minute, second)


def format_value(value: object) -> str:
    """Render a tuple field as its CSV cell text."""
    if isinstance(value, datetime):
        return format_timestamp(value)
    if isinstance(value, (date, time)):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def tuple_to_row(t: AvlTuple) -> dict[str, str]:
    """Serialize a tuple back to its raw CSV record form."""
    row = {}
    for name in FIELD_NAMES:
        value = getattr(t, name)
        if name == "position":
            row["latitude"] = repr(value.latitude)
            row["longitude"] = repr(value.longitude)
        else:
            row[name] = format_value(value)
    return {col: row[col] for col in CSV_COLUMNS}
