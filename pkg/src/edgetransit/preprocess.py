"""Cleaning of raw AVL records: missing tuples, duplicates, missing and
redundant attributes, and wrong attribute values.

Per-record steps (strip, standardize, fill) are stateless and run first;
per-trip steps (sort, dedupe, missing-slot accounting) need the whole trip.
"""

from __future__ import annotations

import csv
import functools
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, fields
from datetime import date
from pathlib import Path
from typing import Any, Final

from .core import (
    ADHERENCE_VALUES,
    CADENCE_S,
    CSV_COLUMNS,
    DOOR_STATUSES,
    FIELD_NAMES,
    NA,
    AvlTuple,
    GeoPoint,
    parse_time_of_day,
    parse_timestamp,
)

MISSING_SLOT_DROP_THRESHOLD: Final = 100
ALIAS_FIELDS: Final = frozenset({"route_name", "door_status", "schedule_adherence"})

_CANONICAL_COLUMNS: Final = frozenset(CSV_COLUMNS)
_TEXT_FIELDS: Final = ("route_name", "trip_id", "vehicle_id", "driver_id", "next_stop_id")
# the critical fields lead the tuple schema
_N_CRITICAL: Final = 6

# (field, casefolded raw spelling) -> canonical spelling
AliasTable = Mapping[tuple[str, str], str]

# every tuple of a trip repeats the same date and times
_parse_date = functools.lru_cache(maxsize=4096)(date.fromisoformat)
_parse_tod = functools.lru_cache(maxsize=4096)(parse_time_of_day)


@dataclass
class CleaningReport:
    trip_id: str = ""
    raw_records: int = 0
    expected_slots: int = 0
    observed_tuples: int = 0
    missing_slots: int = 0
    duplicates_removed: int = 0
    tuples_dropped_missing_critical: int = 0
    tuples_dropped_invalid: int = 0
    fields_filled_na: int = 0
    redundant_fields_removed: int = 0
    values_standardized: int = 0
    trip_dropped: bool = False

    def as_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def load_aliases(path: str | Path) -> dict[tuple[str, str], str]:
    """Read an alias CSV with header ``field,raw,canonical``."""
    table: dict[tuple[str, str], str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"field", "raw", "canonical"}:
            raise ValueError(f"{path}: alias header must be field,raw,canonical")
        for lineno, row in enumerate(reader, start=2):
            field = row["field"].strip()
            if field not in ALIAS_FIELDS:
                raise ValueError(f"{path}:{lineno}: aliases not supported for field {field!r}")
            table[(field, row["raw"].strip().casefold())] = row["canonical"].strip()
    return table


# -- per-record steps ------------------------------------------------------


def strip_redundant_fields(raw: Mapping[str, Any]) -> tuple[dict[str, Any], int]:
    """Drop every column outside the canonical schema."""
    kept = {k: v for k, v in raw.items() if k in _CANONICAL_COLUMNS}
    return kept, len(raw) - len(kept)


class _Drop(Exception):
    pass


def _float_or_none(text: str) -> float | None:
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def _int_or_none(text: str) -> int | None:
    try:
        return int(text)
    except ValueError:
        value = _float_or_none(text)
        if value is not None and value.is_integer():
            return int(value)
        return None


def _enum_value(field: str, text: str, allowed: Sequence[str], aliases: AliasTable) -> str:
    key = text.casefold()
    mapped = aliases.get((field, key))
    if mapped is not None:
        return mapped
    key = key.replace("-", "_").replace(" ", "_")
    return key if key in allowed else NA


def standardize_values(
    record: Mapping[str, Any], aliases: AliasTable | None = None
) -> tuple[dict[str, Any], int] | None:
    """Parse and normalise a record of canonical columns.

    Returns ``(fields, changed)`` keyed by tuple field names, with ``None``
    for absent fields and ``NA`` for unusable non-critical values, or
    ``None`` when a critical value is illegal and the tuple must go.
    """
    aliases = aliases or {}
    try:
        return _standardize(record, aliases)
    except _Drop:
        return None


def _standardize(record: Mapping[str, Any], aliases: AliasTable) -> tuple[dict[str, Any], int]:
    touched: set[str] = set()
    text: dict[str, str | None] = {}
    for col in CSV_COLUMNS:
        raw = record.get(col)
        if raw is None:
            text[col] = None
            continue
        raw = str(raw)
        value = raw.strip()
        if value != raw:
            touched.add(col)
        text[col] = value or None

    out: dict[str, Any] = {}

    ts = text["timestamp"]
    if ts is None or ts == NA:
        out["timestamp"] = None
    else:
        try:
            out["timestamp"] = parse_timestamp(ts)
        except ValueError:
            raise _Drop from None

    lat, lon = text["latitude"], text["longitude"]
    if lat is None or lon is None or lat == NA or lon == NA:
        out["position"] = None
    else:
        flat, flon = _float_or_none(lat), _float_or_none(lon)
        if flat is None or flon is None:
            raise _Drop
        if not (-90.0 <= flat <= 90.0 and -180.0 <= flon <= 180.0):
            raise _Drop
        out["position"] = GeoPoint(flat, flon)

    for name in _TEXT_FIELDS:
        value = text[name]
        if value is not None and name in ALIAS_FIELDS:
            mapped = aliases.get((name, value.casefold()))
            if mapped is not None and mapped != value:
                touched.add(name)
                value = mapped
        if value == NA and name in ("route_name", "trip_id"):
            value = None
        out[name] = value

    for name in ("trip_date", "trip_start_time"):
        value = text[name]
        if value is None or value == NA:
            out[name] = None
            continue
        try:
            out[name] = _parse_date(value) if name == "trip_date" else _parse_tod(value)
        except ValueError:
            raise _Drop from None

    value = text["trip_finish_time"]
    if value is not None and value != NA:
        try:
            value = _parse_tod(value)
        except ValueError:
            value = NA
            touched.add("trip_finish_time")
    out["trip_finish_time"] = value

    for name, lo, hi in (("heading", 0.0, 360.0), ("speed", 0.0, None), ("odometer", 0.0, None)):
        value = text[name]
        if value is not None and value != NA:
            number = _float_or_none(value)
            if number is None or number < lo or (hi is not None and number >= hi):
                value = NA
                touched.add(name)
            else:
                value = number
        out[name] = value

    for name, lo in (("occupancy", 0), ("delay_seconds", None)):
        value = text[name]
        if value is not None and value != NA:
            number = _int_or_none(value)
            if number is None or (lo is not None and number < lo):
                value = NA
                touched.add(name)
            else:
                value = number
        out[name] = value

    for name, allowed in (("door_status", DOOR_STATUSES), ("schedule_adherence", ADHERENCE_VALUES)):
        value = text[name]
        if value is not None and value != NA:
            canonical = _enum_value(name, value, allowed, aliases)
            if canonical != value:
                touched.add(name)
            value = canonical
        out[name] = value

    return out, len(touched)


def fill_or_drop_missing_fields(fields: Mapping[str, Any]) -> tuple[AvlTuple | None, int]:
    """Fill absent non-critical fields with ``NA``; drop on absent critical ones.

    Returns the completed tuple (or ``None`` when dropped) and the number of
    fields that were filled.
    """
    values = [fields.get(name) for name in FIELD_NAMES]
    if None in values[:_N_CRITICAL]:
        return None, 0
    filled = values.count(None)
    if filled:
        values = [NA if v is None else v for v in values]
    return AvlTuple(*values), filled


def clean_record(
    raw: Mapping[str, Any], aliases: AliasTable | None, report: CleaningReport
) -> AvlTuple | None:
    """Run strip, standardize and fill on one raw record, tallying into ``report``."""
    report.raw_records += 1
    record, removed = strip_redundant_fields(raw)
    report.redundant_fields_removed += removed
    standardized = standardize_values(record, aliases)
    if standardized is None:
        report.tuples_dropped_invalid += 1
        return None
    values, changed = standardized
    report.values_standardized += changed
    tup, filled = fill_or_drop_missing_fields(values)
    if tup is None:
        report.tuples_dropped_missing_critical += 1
        return None
    report.fields_filled_na += filled
    return tup


# -- per-trip steps ----------------------------------------------------------


class SlotCounter:
    """Tracks occupancy of a trip's cadence grid, fed in timestamp order.

    The grid starts at the first observed timestamp; each later timestamp
    occupies its nearest slot, which with a 5 s cadence and whole-second
    timestamps is exactly the slot within +/-2 s.
    """

    __slots__ = ("cadence_s", "first", "last_slot", "occupied")

    def __init__(self, cadence_s: int = CADENCE_S) -> None:
        self.cadence_s = cadence_s
        self.first = None
        self.last_slot = -1
        self.occupied = 0

    def add(self, timestamp) -> None:
        if self.first is None:
            self.first = timestamp
        offset = (timestamp - self.first).total_seconds()
        slot = math.floor(offset / self.cadence_s + 0.5)
        if slot < self.last_slot:
            raise ValueError("timestamps must be fed in ascending order")
        if slot != self.last_slot:
            self.occupied += 1
            self.last_slot = slot

    @property
    def expected(self) -> int:
        return self.last_slot + 1

    @property
    def missing(self) -> int:
        return self.expected - self.occupied


def count_missing_slots(tuples: Sequence[AvlTuple], cadence_s: int = CADENCE_S) -> int:
    """Empty cadence slots between the first and last observation."""
    if not tuples:
        raise ValueError("cannot define a cadence grid for an empty trip")
    counter = SlotCounter(cadence_s)
    for t in tuples:
        counter.add(t.timestamp)
    return counter.missing


def should_drop_trip(
    report: CleaningReport, threshold: int = MISSING_SLOT_DROP_THRESHOLD
) -> bool:
    return report.missing_slots >= threshold


def dedupe(tuples: Iterable[AvlTuple]) -> tuple[list[AvlTuple], int]:
    """Keep the first tuple of each run sharing a timestamp (input is sorted)."""
    kept: list[AvlTuple] = []
    removed = 0
    for t in tuples:
        if kept and kept[-1].timestamp == t.timestamp and kept[-1].trip_id == t.trip_id:
            removed += 1
        else:
            kept.append(t)
    return kept, removed


def clean_trip(
    records: Iterable[Mapping[str, Any]],
    aliases: AliasTable | None = None,
    *,
    cadence_s: int = CADENCE_S,
    drop_threshold: int = MISSING_SLOT_DROP_THRESHOLD,
) -> tuple[list[AvlTuple], CleaningReport]:
    """Clean every raw record of one trip.

    Order: strip redundant columns, standardize values, fill or drop missing
    fields, sort by timestamp, remove duplicates, count missing slots, and
    finally decide whether the whole trip is dropped.
    """
    report = CleaningReport()
    survivors = []
    for raw in records:
        tup = clean_record(raw, aliases, report)
        if tup is not None:
            survivors.append(tup)
            if not report.trip_id:
                report.trip_id = tup.trip_id
    survivors.sort(key=lambda t: t.timestamp)  # stable: first arrival wins dedupe
    tuples, report.duplicates_removed = dedupe(survivors)
    report.observed_tuples = len(tuples)
    if tuples:
        counter = SlotCounter(cadence_s)
        for t in tuples:
            counter.add(t.timestamp)
        report.expected_slots = counter.expected
        report.missing_slots = counter.missing
    report.trip_dropped = should_drop_trip(report, drop_threshold)
    if report.trip_dropped:
        tuples = []
    return tuples, report
