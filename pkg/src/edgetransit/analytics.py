"""Streaming descriptive analytics over a cleaned trip stream.

Three folds, innermost first: each tuple is annotated Move or Stop, each
finished trip becomes a :class:`TripSummary`, and each finished day becomes
a :class:`DailySummary` of per-daypart averages.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field
from datetime import date, datetime, time

from .core import (
    DAYPARTS,
    STOP_MOVE_THRESHOLD_M,
    AvlTuple,
    DailySummary,
    Daypart,
    DaypartStats,
    GeoPoint,
    MotionAnnotation,
    MotionLabel,
    TripSummary,
    classify_motion,
)


class SequencingError(ValueError):
    """A tuple arrived that does not extend the trip in time order."""


@dataclass(slots=True)
class TripState:
    trip_id: str
    date: date | None = None
    start_time: time | None = None
    first_timestamp: datetime | None = None
    last_timestamp: datetime | None = None
    previous_point: GeoPoint | None = None
    move_count: int = 0
    stop_count: int = 0
    threshold_m: float = STOP_MOVE_THRESHOLD_M

    @property
    def annotated(self) -> int:
        return self.move_count + self.stop_count


def annotate(state: TripState, tup: AvlTuple) -> MotionAnnotation:
    """Label ``tup`` against the previous point and advance ``state`` in place.

    The first point of a trip has nothing to be displaced from and is a Stop.
    """
    if tup.trip_id != state.trip_id:
        raise SequencingError(f"tuple for trip {tup.trip_id!r} fed to trip {state.trip_id!r}")
    if state.previous_point is None:
        label = MotionLabel.STOP
        state.first_timestamp = tup.timestamp
        state.date = tup.trip_date
        state.start_time = tup.trip_start_time
    else:
        if tup.timestamp <= state.last_timestamp:
            raise SequencingError(
                f"trip {state.trip_id}: {tup.timestamp.isoformat()} does not follow "
                f"{state.last_timestamp.isoformat()}"
            )
        label = classify_motion(state.previous_point, tup.position, state.threshold_m)
    if label is MotionLabel.MOVE:
        state.move_count += 1
    else:
        state.stop_count += 1
    state.previous_point = tup.position
    state.last_timestamp = tup.timestamp
    return MotionAnnotation(tup.timestamp, label)


def finalize_trip(state: TripState) -> TripSummary:
    if state.previous_point is None:
        raise ValueError(f"trip {state.trip_id!r} has no annotated tuples")
    return TripSummary(
        trip_id=state.trip_id,
        date=state.date,
        start_time=state.start_time,
        total_move=state.move_count,
        total_stop=state.stop_count,
        total_time_length=int((state.last_timestamp - state.first_timestamp).total_seconds()),
    )


def summarize_trip(
    tuples: Iterable[AvlTuple], threshold_m: float = STOP_MOVE_THRESHOLD_M
) -> TripSummary:
    """Annotate and finalize a whole clean trip in one call."""
    state = None
    for t in tuples:
        if state is None:
            state = TripState(t.trip_id, threshold_m=threshold_m)
        annotate(state, t)
    if state is None:
        raise ValueError("empty trip")
    return finalize_trip(state)


def daypart_of(start_time: time) -> Daypart:
    """Bucket a trip by its start hour: 5-12 morning, 13-18 afternoon, 19-23 evening."""
    hour = start_time.hour
    if 5 <= hour <= 12:
        return Daypart.MORNING
    if 13 <= hour <= 18:
        return Daypart.AFTERNOON
    if hour >= 19:
        return Daypart.EVENING
    return Daypart.NONE


@dataclass(slots=True)
class DaypartTotals:
    sum_time_length: int = 0
    sum_moves: int = 0
    sum_stops: int = 0
    trip_count: int = 0


@dataclass(slots=True)
class DayState:
    date: date
    totals: dict[Daypart, DaypartTotals] = field(
        default_factory=lambda: {part: DaypartTotals() for part in DAYPARTS}
    )


def fold_trip_into_day(day: DayState, summary: TripSummary) -> DayState:
    """Add a trip to its daypart's running sums. Night trips are skipped."""
    if summary.date != day.date:
        raise ValueError(f"trip {summary.trip_id} dated {summary.date}, day is {day.date}")
    part = daypart_of(summary.start_time)
    if part is Daypart.NONE:
        return day
    totals = day.totals[part]
    totals.sum_time_length += summary.total_time_length
    totals.sum_moves += summary.total_move
    totals.sum_stops += summary.total_stop
    totals.trip_count += 1
    return day


def finalize_day(day: DayState) -> DailySummary:
    stats = {}
    for part in DAYPARTS:
        t = day.totals[part]
        if t.trip_count:
            n = t.trip_count
            stats[part.value] = DaypartStats(
                t.sum_time_length / n, t.sum_moves / n, t.sum_stops / n, n
            )
        else:
            stats[part.value] = DaypartStats()
    return DailySummary(date=day.date, **stats)


def summarize_day(day: date, summaries: Iterable[TripSummary]) -> DailySummary:
    state = DayState(day)
    for s in summaries:
        fold_trip_into_day(state, s)
    return finalize_day(state)
