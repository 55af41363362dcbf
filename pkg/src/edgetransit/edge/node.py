"""The on-bus pipeline: reorder, clean, annotate, summarize, uplink.

Raw records are cleaned one at a time, held in a reorder buffer for
``reorder_window_s`` of event time, and then released in timestamp order to
the per-trip fold. Trip and day boundaries are decided on released tuples
(and on wall-clock ticks from live sources), so the output depends only on
the set of tuples, not on their arrival order within the window.
"""

from __future__ import annotations

import enum
import heapq
import itertools
import logging
from collections.abc import Iterable, Mapping
from dataclasses import asdict, dataclass
from datetime import date, datetime, time, timedelta
from typing import Any, Protocol
from zoneinfo import ZoneInfo

from ..analytics import DayState, TripState, annotate, finalize_day, finalize_trip, fold_trip_into_day
from ..core import AvlTuple
from ..preprocess import AliasTable, CleaningReport, SlotCounter, clean_record, load_aliases, should_drop_trip
from ..wire import daily_message, trip_message
from .config import EdgeConfig
from .ingest import Tick

log = logging.getLogger(__name__)


class Sink(Protocol):
    sent: int
    evicted: int

    @property
    def pending(self) -> int: ...

    def send(self, message: dict[str, Any]) -> None: ...

    def close(self, timeout: float | None = None) -> bool: ...


class Boundary(enum.Enum):
    CONTINUE = "continue"
    END_OF_TRIP = "end_of_trip"
    END_OF_DAY = "end_of_day"


def local_day(instant: datetime, tz: ZoneInfo, rollover: time = time(0, 0)) -> date:
    """The operating day an instant belongs to, with days starting at ``rollover``."""
    local = instant.astimezone(tz)
    shift = timedelta(hours=rollover.hour, minutes=rollover.minute, seconds=rollover.second)
    return (local - shift).date()


def detect_trip_boundary(
    trip: TripState | None, trip_id: str | None, now: datetime, idle_timeout_s: float
) -> Boundary:
    """End the open trip on a trip_id change or after ``idle_timeout_s`` of silence."""
    if trip is None or trip.last_timestamp is None:
        return Boundary.CONTINUE
    if trip_id is not None and trip_id != trip.trip_id:
        return Boundary.END_OF_TRIP
    if (now - trip.last_timestamp).total_seconds() > idle_timeout_s:
        return Boundary.END_OF_TRIP
    return Boundary.CONTINUE


def detect_day_boundary(
    now: datetime, day: date | None, tz: ZoneInfo, rollover: time = time(0, 0)
) -> Boundary:
    if day is not None and local_day(now, tz, rollover) > day:
        return Boundary.END_OF_DAY
    return Boundary.CONTINUE


class ReorderBuffer:
    """Min-heap on (timestamp, arrival order); ties keep arrival order."""

    def __init__(self, window_s: float) -> None:
        self.window = timedelta(seconds=window_s)
        self._heap: list[tuple[datetime, int, AvlTuple]] = []
        self._seq = itertools.count()
        self.high_water: datetime | None = None

    def __len__(self) -> int:
        return len(self._heap)

    def push(self, t: AvlTuple) -> None:
        heapq.heappush(self._heap, (t.timestamp, next(self._seq), t))
        if self.high_water is None or t.timestamp > self.high_water:
            self.high_water = t.timestamp

    def release(self, now: datetime | None = None) -> Iterable[AvlTuple]:
        """Pop tuples strictly older than ``now - window`` (``now`` defaults to the newest seen)."""
        reference = now if now is not None else self.high_water
        if reference is None:
            return
        cutoff = reference - self.window
        heap = self._heap
        while heap and heap[0][0] < cutoff:
            yield heapq.heappop(heap)[2]

    def drain(self) -> Iterable[AvlTuple]:
        while self._heap:
            yield heapq.heappop(self._heap)[2]


@dataclass
class PipelineMetrics:
    tuples_in: int = 0
    tuples_clean: int = 0
    tuples_dropped: int = 0
    tuples_late: int = 0
    duplicates_removed: int = 0
    fields_filled_na: int = 0
    redundant_fields_removed: int = 0
    values_standardized: int = 0
    malformed_rows: int = 0
    trips_summarized: int = 0
    trips_dropped: int = 0
    trips_misdated: int = 0
    days_summarized: int = 0
    messages_sent: int = 0
    messages_buffered: int = 0
    messages_evicted: int = 0

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


class _TripSession:
    __slots__ = ("state", "slots", "report")

    def __init__(self, t: AvlTuple, config: EdgeConfig) -> None:
        self.state = TripState(t.trip_id, threshold_m=config.stop_move_threshold_m)
        self.slots = SlotCounter(config.cadence_s)
        self.report = CleaningReport(trip_id=t.trip_id)


class EdgeNode:
    """Single-writer fold over one bus's tuple stream."""

    def __init__(
        self, config: EdgeConfig, sink: Sink, aliases: AliasTable | None = None
    ) -> None:
        self.config = config
        self.sink = sink
        self.aliases = aliases or {}
        self.metrics = PipelineMetrics()
        self.trip_reports: list[CleaningReport] = []
        self._tz = config.tz
        self._rollover = config.day_rollover
        self._idle = timedelta(seconds=config.trip_idle_timeout_s)
        self._reorder = ReorderBuffer(config.reorder_window_s)
        self._record_report = CleaningReport()
        self._trip: _TripSession | None = None
        self._day: DayState | None = None
        self._last_ts: datetime | None = None

    # input side

    def feed(self, raw: Mapping[str, Any]) -> None:
        self.metrics.tuples_in += 1
        tup = clean_record(raw, self.aliases, self._record_report)
        if tup is None:
            return
        self._reorder.push(tup)
        for ready in self._reorder.release():
            self._process(ready)

    def tick(self, now: datetime) -> None:
        """Advance on wall-clock time when a live source is quiet."""
        for ready in self._reorder.release(now):
            self._process(ready)
        if detect_day_boundary(now, self._day.date if self._day else None, self._tz, self._rollover) is Boundary.END_OF_DAY:
            self._end_trip()
            self._end_day()
        trip_state = self._trip.state if self._trip else None
        if detect_trip_boundary(trip_state, None, now, self.config.trip_idle_timeout_s) is Boundary.END_OF_TRIP:
            self._end_trip()

    def close(self) -> None:
        """Source exhausted: flush everything still held, then the open trip and day."""
        for ready in self._reorder.drain():
            self._process(ready)
        self._end_trip()
        self._end_day()
        self._sync_record_counters()

    # fold

    def _process(self, t: AvlTuple) -> None:
        m = self.metrics
        if self._last_ts is not None and t.timestamp <= self._last_ts:
            trip = self._trip
            if trip is not None and t.timestamp == self._last_ts and t.trip_id == trip.state.trip_id:
                m.duplicates_removed += 1
                trip.report.duplicates_removed += 1
            else:
                m.tuples_late += 1
                log.debug("late tuple %s %s dropped", t.trip_id, t.timestamp)
            return

        day = local_day(t.timestamp, self._tz, self._rollover)
        if self._day is not None and day > self._day.date:
            self._end_trip()
            self._end_day()
        if self._trip is not None:
            state = self._trip.state
            if t.trip_id != state.trip_id or t.timestamp - state.last_timestamp > self._idle:
                self._end_trip()
        if self._day is None:
            self._day = DayState(day)
        if self._trip is None:
            self._trip = _TripSession(t, self.config)

        annotate(self._trip.state, t)
        self._trip.slots.add(t.timestamp)
        self._last_ts = t.timestamp
        m.tuples_clean += 1

    def _end_trip(self) -> None:
        session, self._trip = self._trip, None
        if session is None:
            return
        report = session.report
        report.observed_tuples = session.slots.occupied
        report.expected_slots = session.slots.expected
        report.missing_slots = session.slots.missing
        report.trip_dropped = should_drop_trip(report, self.config.missing_slot_drop_threshold)
        self.trip_reports.append(report)
        if report.trip_dropped:
            self.metrics.trips_dropped += 1
            log.info("trip %s dropped: %d missing slots", report.trip_id, report.missing_slots)
            return
        summary = finalize_trip(session.state)
        self.sink.send(trip_message(summary))
        self.metrics.trips_summarized += 1
        if self._day is not None and summary.date == self._day.date:
            fold_trip_into_day(self._day, summary)
        else:
            self.metrics.trips_misdated += 1
            log.warning("trip %s dated %s outside open day; not folded", summary.trip_id, summary.date)

    def _end_day(self) -> None:
        day, self._day = self._day, None
        if day is None:
            return
        self.sink.send(daily_message(finalize_day(day)))
        self.metrics.days_summarized += 1

    def _sync_record_counters(self) -> None:
        r, m = self._record_report, self.metrics
        m.tuples_dropped = r.tuples_dropped_invalid + r.tuples_dropped_missing_critical
        m.fields_filled_na = r.fields_filled_na
        m.redundant_fields_removed = r.redundant_fields_removed
        m.values_standardized = r.values_standardized


@dataclass
class PipelineResult:
    status: int
    metrics: PipelineMetrics


def run_pipeline(
    config: EdgeConfig,
    source: Iterable[Mapping[str, Any] | Tick],
    sink: Sink | None = None,
    *,
    aliases: AliasTable | None = None,
    ingest_stats=None,
    drain_timeout_s: float | None = 30.0,
) -> PipelineResult:
    """Run one bus's stream to exhaustion and ship the summaries.

    Without an explicit ``sink`` the summaries go to ``config.hub_endpoint``.
    Exit status is 0 when every message was acknowledged, 3 otherwise.
    """
    if sink is None:
        from .uplink import Uplink

        host, port = config.hub_address
        sink = Uplink(
            host,
            port,
            capacity=config.uplink_buffer_capacity,
            backoff_base_s=config.uplink_backoff_base_s,
            backoff_cap_s=config.uplink_backoff_cap_s,
        )
    if aliases is None and config.alias_file:
        aliases = load_aliases(config.alias_file)
    node = EdgeNode(config, sink, aliases)
    feed, tick = node.feed, node.tick
    for item in source:
        if isinstance(item, Tick):
            tick(item.now)
        else:
            feed(item)
    node.close()
    drained = sink.close(drain_timeout_s)
    m = node.metrics
    m.messages_sent = sink.sent
    m.messages_buffered = sink.pending
    m.messages_evicted = sink.evicted
    if ingest_stats is not None:
        m.malformed_rows = ingest_stats.malformed + ingest_stats.partial_lines
    return PipelineResult(0 if drained and not m.messages_buffered else 3, m)
