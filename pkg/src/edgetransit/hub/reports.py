"""Operational reports computed from the hub's stored summaries."""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from pathlib import Path
from typing import Any

from ..analytics import summarize_day
from ..core import DAYPARTS, DailySummary, TripSummary
from ..wire import (
    DAILY_SUMMARY,
    TRIP_SUMMARY,
    daily_summary_from_payload,
    daily_summary_payload,
    trip_summary_from_payload,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class ScheduleEntry:
    scheduled_departure: datetime
    route_name: str = ""

    @property
    def date(self) -> date:
        return self.scheduled_departure.date()


def load_schedule(path: str | Path) -> list[ScheduleEntry]:
    """Read ``route_name,date,departure_time`` rows (local HH:MM)."""
    entries = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"route_name", "date", "departure_time"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: schedule header lacks {sorted(missing)}")
        for row in reader:
            hh, mm = row["departure_time"].strip().split(":")[:2]
            departure = datetime.combine(
                date.fromisoformat(row["date"].strip()), time(int(hh), int(mm))
            )
            entries.add(ScheduleEntry(departure, row["route_name"].strip()))
    return sorted(entries)


def detect_missing_trips(
    summaries: Iterable[TripSummary],
    schedule: Iterable[ScheduleEntry],
    tolerance_min: float = 20,
) -> list[ScheduleEntry]:
    """Scheduled departures with no trip starting within +/- ``tolerance_min``.

    Pairs are taken greedily, closest in time first, and each trip can
    account for at most one departure.
    """
    if tolerance_min < 0:
        raise ValueError("tolerance_min must be >= 0")
    entries = sorted(schedule)
    starts = sorted(datetime.combine(s.date, s.start_time) for s in summaries)
    tolerance = timedelta(minutes=tolerance_min)

    by_day: dict[date, list[int]] = defaultdict(list)
    for j, start in enumerate(starts):
        by_day[start.date()].append(j)
    candidates = []
    for i, entry in enumerate(entries):
        for j in by_day.get(entry.date, ()):
            gap = abs(starts[j] - entry.scheduled_departure)
            if gap <= tolerance:
                candidates.append((gap, i, j))
    candidates.sort()

    matched_entries: set[int] = set()
    used_trips: set[int] = set()
    for _, i, j in candidates:
        if i not in matched_entries and j not in used_trips:
            matched_entries.add(i)
            used_trips.add(j)
    return [e for i, e in enumerate(entries) if i not in matched_entries]


@dataclass
class DailyReport:
    date: date
    trip_count: int
    avg_total_time: float | None
    summary: DailySummary
    edge_summary: DailySummary | None = None

    @property
    def edge_agrees(self) -> bool | None:
        """Whether the edge's daily averages match the hub's recomputation."""
        if self.edge_summary is None:
            return None
        return daily_summary_payload(self.summary) == daily_summary_payload(self.edge_summary)


def daily_report(
    day: date,
    summaries: Sequence[TripSummary],
    edge_summary: DailySummary | None = None,
) -> DailyReport:
    for s in summaries:
        if s.date != day:
            raise ValueError(f"trip {s.trip_id} is dated {s.date}, not {day}")
    n = len(summaries)
    avg = sum(s.total_time_length for s in summaries) / n if n else None
    return DailyReport(day, n, avg, summarize_day(day, summaries), edge_summary)


@dataclass(frozen=True)
class BoxplotStats:
    label: str
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    outliers: tuple[float, ...] = ()

    @property
    def fences(self) -> tuple[float, float]:
        iqr = self.q3 - self.q1
        return self.q1 - 1.5 * iqr, self.q3 + 1.5 * iqr


def _median(sorted_values: Sequence[float]) -> float:
    n = len(sorted_values)
    mid = n // 2
    if n % 2:
        return float(sorted_values[mid])
    return (sorted_values[mid - 1] + sorted_values[mid]) / 2


def tukey_hinges(values: Iterable[float]) -> tuple[float, float, float]:
    """Quartiles by the inclusive-median method: for odd n the median sits in both halves."""
    data = sorted(values)
    n = len(data)
    if n == 0:
        raise ValueError("no values")
    half = (n + 1) // 2
    return _median(data[:half]), _median(data), _median(data[n - half:])


def boxplot(groups: Mapping[str, Sequence[float]]) -> list[BoxplotStats]:
    """Five-number summaries with 1.5 IQR outliers; whiskers stop at the last inlier.

    Empty groups are skipped.
    """
    out = []
    for label, values in groups.items():
        if not values:
            log.info("boxplot group %r is empty; skipped", label)
            continue
        q1, med, q3 = tukey_hinges(values)
        iqr = q3 - q1
        lo, hi = q1 - 1.5 * iqr, q3 + 1.5 * iqr
        inliers = [v for v in values if lo <= v <= hi]
        outliers = tuple(sorted(v for v in values if v < lo or v > hi))
        out.append(
            BoxplotStats(label, len(values), min(inliers), q1, med, q3, max(inliers), outliers)
        )
    return out


@dataclass
class HubReport:
    start: date
    end: date
    daily: list[DailyReport]
    trips: list[TripSummary]
    boxplots: list[BoxplotStats]
    missing: list[ScheduleEntry] | None = None
    notes: list[str] = field(default_factory=list)


def split_records(
    records: Iterable[Mapping[str, Any]],
) -> tuple[list[TripSummary], dict[date, DailySummary]]:
    trips, dailies = [], {}
    for record in records:
        if record["type"] == TRIP_SUMMARY:
            trips.append(trip_summary_from_payload(record["payload"]))
        elif record["type"] == DAILY_SUMMARY:
            daily = daily_summary_from_payload(record["payload"])
            dailies[daily.date] = daily
    return trips, dailies


def build_report(
    records: Iterable[Mapping[str, Any]],
    start: date,
    end: date,
    schedule: Sequence[ScheduleEntry] | None = None,
    tolerance_min: float = 20,
) -> HubReport:
    """Assemble every report kind for the dates ``start`` through ``end``."""
    if end < start:
        raise ValueError("end date precedes start date")
    trips, dailies = split_records(records)
    trips = sorted(
        (t for t in trips if start <= t.date <= end),
        key=lambda t: (t.date, t.start_time, t.trip_id),
    )
    by_day: dict[date, list[TripSummary]] = defaultdict(list)
    for t in trips:
        by_day[t.date].append(t)

    notes = []
    daily = []
    day = start
    while day <= end:
        rep = daily_report(day, by_day.get(day, []), dailies.get(day))
        if rep.edge_agrees is False:
            notes.append(f"{day}: edge daily summary disagrees with hub recomputation")
        daily.append(rep)
        day += timedelta(days=1)

    groups: dict[str, list[float]] = {}
    for part in DAYPARTS:
        values = [
            r.summary.daypart(part).avg_time_length
            for r in daily
            if r.summary.daypart(part).trip_count
        ]
        groups[part.value] = values
        if not values:
            notes.append(f"boxplot: no {part.value} trips in range; group skipped")

    missing = None
    if schedule is not None:
        in_range = [e for e in schedule if start <= e.date <= end]
        missing = detect_missing_trips(trips, in_range, tolerance_min)
    return HubReport(start, end, daily, trips, boxplot(groups), missing, notes)
