"""Deterministic synthetic AVL streams with known-correct summaries.

:func:`generate` drives a bus back and forth along a polyline, dwelling at
fixed offsets, and writes the resulting feed together with the summaries a
correct pipeline must emit. Those expected summaries come from a plain
batch recount in this module; nothing here calls into the analytics fold.
:func:`corrupt` then injects the faults the cleaning steps must undo.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import random
import sys
from collections.abc import Sequence
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta, timezone
from pathlib import Path
from typing import Any
from zoneinfo import ZoneInfo

from .core import CSV_COLUMNS, CRITICAL_FIELDS, GeoPoint, great_circle_distance

# A loop through downtown Moncton, roughly 2.9 km end to end.
DEFAULT_ROUTE = (
    GeoPoint(46.0878, -64.7782),
    GeoPoint(46.0905, -64.7750),
    GeoPoint(46.0931, -64.7701),
    GeoPoint(46.0962, -64.7668),
    GeoPoint(46.0990, -64.7610),
)

# local [start, end) hours per bucket; trips must finish inside their window
_WINDOWS = {
    "night": (0, 5),
    "morning": (5, 13),
    "afternoon": (13, 19),
    "evening": (19, 24),
}

_NON_CRITICAL_COLUMNS = tuple(
    c for c in CSV_COLUMNS if c not in CRITICAL_FIELDS and c not in ("latitude", "longitude")
)


@dataclass(frozen=True)
class FaultPlan:
    duplicate_rate: float = 0.0
    drop_rate: float = 0.0
    reorder_rate: float = 0.0
    reorder_max_s: int = 15
    malformed_rate: float = 0.0
    field_missing_rate: float = 0.0

    @property
    def is_clean(self) -> bool:
        return not (
            self.duplicate_rate or self.drop_rate or self.reorder_rate
            or self.malformed_rate or self.field_missing_rate
        )


@dataclass(frozen=True)
class FixtureSpec:
    seed: int = 0
    days: int = 1
    start_date: date = date(2017, 2, 14)
    timezone: str = "UTC"
    route_name: str = "51"
    vehicle_id: str = "bus-5101"
    driver_id: str = "drv-017"
    trips_morning: int = 1
    trips_afternoon: int = 0
    trips_evening: int = 0
    trips_night: int = 0
    trip_duration_mean_s: int = 600
    trip_duration_jitter_s: int = 60
    cadence_s: int = 5
    cruise_speed_mps: float = 8.0
    gps_noise_m: float = 1.5
    route: tuple[GeoPoint, ...] = DEFAULT_ROUTE
    dwell_pattern: tuple[tuple[int, int], ...] = ((60, 30), (240, 45), (420, 30))
    stop_move_threshold_m: float = 15.0
    faults: FaultPlan = field(default_factory=FaultPlan)

    def __post_init__(self) -> None:
        if self.days < 0 or self.cadence_s <= 0:
            raise ValueError("days must be >= 0 and cadence_s > 0")
        if min(self.trips_morning, self.trips_afternoon, self.trips_evening, self.trips_night) < 0:
            raise ValueError("trip counts must be >= 0")
        if not self.route:
            raise ValueError("route needs at least one point")
        if self.trip_duration_mean_s - self.trip_duration_jitter_s < 0:
            raise ValueError("trip duration can go negative")

    @property
    def trips_per_day(self) -> dict[str, int]:
        return {
            "night": self.trips_night,
            "morning": self.trips_morning,
            "afternoon": self.trips_afternoon,
            "evening": self.trips_evening,
        }


@dataclass
class Fixture:
    header: list[str]
    rows: list[list[str]]
    ground_truth: list[dict[str, Any]]
    schedule: list[tuple[str, str, str]]


# -- geometry ------------------------------------------------------------------


class _Polyline:
    def __init__(self, points: Sequence[GeoPoint]) -> None:
        self.points = list(points)
        self.cumulative = [0.0]
        for a, b in zip(self.points, self.points[1:]):
            self.cumulative.append(self.cumulative[-1] + great_circle_distance(a, b))
        self.length = self.cumulative[-1]

    def at(self, s: float) -> tuple[float, float]:
        """Point at arc length ``s``, bouncing between the two ends."""
        if self.length == 0:
            return self.points[0].latitude, self.points[0].longitude
        s = s % (2 * self.length)
        if s > self.length:
            s = 2 * self.length - s
        for i in range(1, len(self.cumulative)):
            if s <= self.cumulative[i] or i == len(self.cumulative) - 1:
                seg = self.cumulative[i] - self.cumulative[i - 1]
                f = 0.0 if seg == 0 else (s - self.cumulative[i - 1]) / seg
                a, b = self.points[i - 1], self.points[i]
                return (
                    a.latitude + f * (b.latitude - a.latitude),
                    a.longitude + f * (b.longitude - a.longitude),
                )
        raise AssertionError("unreachable")


def _meters_to_degrees(lat: float, north_m: float, east_m: float) -> tuple[float, float]:
    dlat = math.degrees(north_m / 6_371_000.0)
    dlon = math.degrees(east_m / (6_371_000.0 * max(math.cos(math.radians(lat)), 1e-6)))
    return dlat, dlon


# -- generation ----------------------------------------------------------------


def _trip_plan(spec: FixtureSpec, rng: random.Random) -> list[tuple[datetime, int]]:
    """(local start, duration) for every trip, in time order."""
    tz = ZoneInfo(spec.timezone)
    plan = []
    for d in range(spec.days):
        day = spec.start_date + timedelta(days=d)
        for bucket in ("night", "morning", "afternoon", "evening"):
            n = spec.trips_per_day[bucket]
            if not n:
                continue
            lo, hi = _WINDOWS[bucket]
            window_s = (hi - lo) * 3600
            spacing = window_s // n
            for i in range(n):
                offset = (i * spacing) // 60 * 60
                start = datetime.combine(day, time(lo)) + timedelta(seconds=offset)
                jitter = rng.randint(-spec.trip_duration_jitter_s, spec.trip_duration_jitter_s)
                duration = spec.trip_duration_mean_s + jitter
                # next trip begins at the next minute boundary at the earliest
                next_start = ((i + 1) * spacing) // 60 * 60 if i + 1 < n else window_s
                if offset + duration >= next_start:
                    raise ValueError(
                        f"{n} {bucket} trips of up to {duration}s do not fit in a {window_s}s window"
                    )
                plan.append((start.replace(tzinfo=tz), duration))
    return plan


def _fmt_coord(value: float) -> str:
    return f"{value:.7f}"


def generate_fixture(spec: FixtureSpec) -> Fixture:
    rng = random.Random(spec.seed)
    line = _Polyline(spec.route)
    rows: list[list[str]] = []
    schedule: list[tuple[str, str, str]] = []
    stop_id = 0
    for local_start, duration in _trip_plan(spec, rng):
        trip_date = local_start.date()
        start_txt = local_start.strftime("%H:%M:%S")
        finish_txt = (local_start + timedelta(seconds=duration)).strftime("%H:%M:%S")
        trip_id = f"{spec.route_name}-{trip_date:%Y%m%d}-{local_start:%H%M}"
        schedule.append((spec.route_name, trip_date.isoformat(), local_start.strftime("%H:%M")))
        start_utc = local_start.astimezone(timezone.utc)
        s = rng.uniform(0, line.length)
        occupancy = rng.randint(0, 20)
        offsets = list(range(0, duration + 1, spec.cadence_s))
        if offsets[-1] != duration:
            offsets.append(duration)  # the last report lands on the trip's true end
        previous_t = 0
        for step, t in enumerate(offsets):
            dwelling = any(off <= t < off + dwell for off, dwell in spec.dwell_pattern)
            if step and not dwelling:
                s += spec.cruise_speed_mps * (t - previous_t)
            previous_t = t
            lat, lon = line.at(s)
            if spec.gps_noise_m:
                dlat, dlon = _meters_to_degrees(
                    lat, rng.gauss(0, spec.gps_noise_m), rng.gauss(0, spec.gps_noise_m)
                )
                lat, lon = lat + dlat, lon + dlon
            if dwelling and any(t == off for off, _ in spec.dwell_pattern):
                stop_id += 1
                occupancy = max(0, occupancy + rng.randint(-4, 5))
            ts = start_utc + timedelta(seconds=t)
            rows.append([
                ts.strftime("%Y-%m-%dT%H:%M:%SZ"),
                _fmt_coord(lat),
                _fmt_coord(lon),
                spec.route_name,
                trip_id,
                trip_date.isoformat(),
                start_txt,
                finish_txt,
                spec.vehicle_id,
                spec.driver_id,
                f"{rng.uniform(0, 359.9):.1f}",
                "0.0" if dwelling else f"{spec.cruise_speed_mps:.1f}",
                f"{s:.1f}",
                "open" if dwelling else "closed",
                str(occupancy),
                str(rng.randint(-60, 240)),
                f"S{stop_id % 40 + 1:03d}",
                rng.choice(("early", "on_time", "on_time", "late")),
            ])
    return Fixture(list(CSV_COLUMNS), rows, expected_messages(rows, spec.stop_move_threshold_m), schedule)


# -- ground truth --------------------------------------------------------------


def _bucket(start_time: str) -> str | None:
    hour = int(start_time[:2])
    if 5 <= hour <= 12:
        return "morning"
    if 13 <= hour <= 18:
        return "afternoon"
    if 19 <= hour <= 23:
        return "evening"
    return None


def expected_messages(
    rows: Sequence[Sequence[str]], threshold_m: float = 15.0, cadence_s: int = 5
) -> list[dict[str, Any]]:
    """Batch recount of the summaries a clean, time-ordered feed must yield.

    Rows are grouped into trips by consecutive trip_id; days are the trips'
    dates. The first point of a trip counts as a stop; a later point is a
    stop when it lies under ``threshold_m`` (at micrometre resolution) from
    the point before it. Averages are rounded to one decimal as on the wire.
    """
    col = {name: i for i, name in enumerate(CSV_COLUMNS)}
    trips: list[dict[str, Any]] = []
    for row in rows:
        if not trips or trips[-1]["trip_id"] != row[col["trip_id"]]:
            trips.append({
                "trip_id": row[col["trip_id"]],
                "date": row[col["trip_date"]],
                "start_time": row[col["trip_start_time"]],
                "points": [],
                "stamps": [],
            })
        trips[-1]["points"].append(GeoPoint(float(row[col["latitude"]]), float(row[col["longitude"]])))
        trips[-1]["stamps"].append(row[col["timestamp"]])

    messages: list[dict[str, Any]] = []
    day_trips: list[dict[str, Any]] = []

    def close_day() -> None:
        if not day_trips:
            return
        payload: dict[str, Any] = {"date": day_trips[0]["date"]}
        for bucket in ("morning", "afternoon", "evening"):
            members = [t for t in day_trips if _bucket(t["start_time"]) == bucket]
            n = len(members)
            payload[bucket] = {
                "avg_time_length": round(sum(t["total_time_length"] for t in members) / n, 1) if n else None,
                "avg_moves": round(sum(t["total_move"] for t in members) / n, 1) if n else None,
                "avg_stops": round(sum(t["total_stop"] for t in members) / n, 1) if n else None,
                "trip_count": n,
            }
        messages.append({"type": "daily_summary", "schema_version": 1, "payload": payload})
        day_trips.clear()

    for trip in trips:
        points = trip["points"]
        stops = 1 + sum(
            1 for a, b in zip(points, points[1:]) if round(great_circle_distance(a, b), 6) < threshold_m
        )
        first = datetime.strptime(trip["stamps"][0], "%Y-%m-%dT%H:%M:%SZ")
        last = datetime.strptime(trip["stamps"][-1], "%Y-%m-%dT%H:%M:%SZ")
        payload = {
            "trip_id": trip["trip_id"],
            "date": trip["date"],
            "start_time": trip["start_time"],
            "total_move": len(points) - stops,
            "total_stop": stops,
            "total_time_length": int((last - first).total_seconds()),
        }
        if day_trips and day_trips[0]["date"] != trip["date"]:
            close_day()
        messages.append({"type": "trip_summary", "schema_version": 1, "payload": payload})
        day_trips.append(payload)
    close_day()
    return messages


# -- fault injection -----------------------------------------------------------


def _parse_ts(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%SZ")


def corrupt_rows(
    rows: Sequence[Sequence[str]], plan: FaultPlan, seed: int
) -> tuple[list[list[str]], dict[str, int]]:
    """Apply ``plan`` to a clean, ordered feed. Returns new rows and a manifest.

    Drops never touch a trip's first or last row, so trip extents survive.
    Reordering delays a row's arrival by 1..``reorder_max_s`` seconds of
    event time; duplicates arrive within the same bound of their original.
    """
    rng = random.Random(seed)
    manifest = {"seed": seed, "dropped": 0, "fields_blanked": 0, "duplicates": 0, "reordered": 0, "malformed": 0}
    col = {name: i for i, name in enumerate(CSV_COLUMNS)}
    trip_col = col["trip_id"]
    blank_cols = [col[c] for c in _NON_CRITICAL_COLUMNS]

    kept: list[list[str]] = []
    n = len(rows)
    for i, row in enumerate(rows):
        first = i == 0 or rows[i - 1][trip_col] != row[trip_col]
        last = i == n - 1 or rows[i + 1][trip_col] != row[trip_col]
        if plan.drop_rate and not (first or last) and rng.random() < plan.drop_rate:
            manifest["dropped"] += 1
            continue
        row = list(row)
        if plan.field_missing_rate and rng.random() < plan.field_missing_rate:
            row[rng.choice(blank_cols)] = ""
            manifest["fields_blanked"] += 1
        kept.append(row)

    keyed: list[tuple[float, list[str]]] = []
    for row in kept:
        ts = _parse_ts(row[0]).timestamp()
        delay = 0
        if plan.reorder_rate and rng.random() < plan.reorder_rate:
            delay = rng.randint(1, plan.reorder_max_s)
            manifest["reordered"] += 1
        keyed.append((ts + delay, row))
        if plan.duplicate_rate and rng.random() < plan.duplicate_rate:
            keyed.append((ts + rng.randint(0, plan.reorder_max_s), list(row)))
            manifest["duplicates"] += 1
    keyed.sort(key=lambda pair: pair[0])
    out = [row for _, row in keyed]

    if plan.malformed_rate:
        for i, row in enumerate(out):
            if rng.random() < plan.malformed_rate:
                out[i] = row[: rng.randint(1, len(row) - 1)]
                manifest["malformed"] += 1
    return out, manifest


def drop_slots(
    rows: Sequence[Sequence[str]], trip_id: str, count: int, seed: int = 0
) -> list[list[str]]:
    """Remove exactly ``count`` interior, pairwise non-adjacent rows of one trip.

    Each removal empties exactly one cadence slot and no gap grows beyond
    two cadence intervals, so the trip is neither split nor shortened.
    """
    trip_col = CSV_COLUMNS.index("trip_id")
    idx = [i for i, r in enumerate(rows) if r[trip_col] == trip_id]
    interior = idx[1:-1]
    # alternate positions are pairwise non-adjacent
    candidates = interior[::2]
    if count > len(candidates):
        raise ValueError(f"trip {trip_id} has room for {len(candidates)} isolated drops, not {count}")
    doomed = set(random.Random(seed).sample(candidates, count))
    return [list(r) for i, r in enumerate(rows) if i not in doomed]


# -- files -----------------------------------------------------------------------


def _csv_bytes(header: Sequence[str] | None, rows: Sequence[Sequence[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    if header is not None:
        writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_csv(path: str | Path, rows: Sequence[Sequence[str]], header: Sequence[str] = CSV_COLUMNS) -> None:
    Path(path).write_text(_csv_bytes(header, rows), encoding="utf-8")


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


def generate(spec: FixtureSpec, out_dir: str | Path) -> dict[str, Path]:
    """Write ``avl.csv``, ``ground_truth.json`` and ``schedule.csv`` (and the
    corrupted feed plus manifest when the spec carries faults)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fx = generate_fixture(spec)
    paths = {
        "avl": out / "avl.csv",
        "ground_truth": out / "ground_truth.json",
        "schedule": out / "schedule.csv",
        "edge_config": out / "edge.ini",
    }
    write_csv(paths["avl"], fx.rows, fx.header)
    paths["ground_truth"].write_text(
        json.dumps(fx.ground_truth, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    write_csv(paths["schedule"], fx.schedule, ("route_name", "date", "departure_time"))
    paths["edge_config"].write_text(
        f"[edge]\ntimezone = {spec.timezone}\n"
        f"stop_move_threshold_m = {spec.stop_move_threshold_m}\n"
        f"cadence_s = {spec.cadence_s}\n",
        encoding="utf-8",
    )
    if not spec.faults.is_clean:
        corrupted, manifest = corrupt_rows(fx.rows, spec.faults, spec.seed)
        paths["corrupted"] = out / "avl_corrupted.csv"
        paths["manifest"] = out / "manifest.json"
        write_csv(paths["corrupted"], corrupted, fx.header)
        paths["manifest"].write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    return paths


def corrupt(
    clean_csv: str | Path, out_csv: str | Path, plan: FaultPlan, seed: int
) -> dict[str, int]:
    """File-level :func:`corrupt_rows`; the manifest lands beside ``out_csv``."""
    header, rows = read_csv(clean_csv)
    corrupted, manifest = corrupt_rows(rows, plan, seed)
    write_csv(out_csv, corrupted, header)
    Path(out_csv).with_suffix(".manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n", encoding="utf-8"
    )
    return manifest


# -- spec file -------------------------------------------------------------------


def _parse_route(text: str) -> tuple[GeoPoint, ...]:
    points = []
    for chunk in text.split(";"):
        if chunk.strip():
            lat, lon = chunk.split()
            points.append(GeoPoint(float(lat), float(lon)))
    return tuple(points)


def _parse_dwells(text: str) -> tuple[tuple[int, int], ...]:
    pairs = []
    for chunk in text.split(","):
        if chunk.strip():
            offset, dwell = chunk.split(":")
            pairs.append((int(offset), int(dwell)))
    return tuple(pairs)


def load_spec(path: str | Path) -> FixtureSpec:
    """Read a key-value spec file (same INI style as the edge config)."""
    from .edge.config import read_key_values

    raw = read_key_values(path)
    spec_fields = {f.name: f for f in dataclasses.fields(FixtureSpec)}
    fault_fields = {f.name: f for f in dataclasses.fields(FaultPlan)}
    spec_kwargs: dict[str, Any] = {}
    fault_kwargs: dict[str, Any] = {}
    for key, text in raw.items():
        text = text.strip()
        if key in fault_fields:
            kind = fault_fields[key].type
            fault_kwargs[key] = int(text) if kind == "int" else float(text)
        elif key == "route":
            spec_kwargs[key] = _parse_route(text)
        elif key == "dwell_pattern":
            spec_kwargs[key] = _parse_dwells(text)
        elif key in spec_fields and key != "faults":
            kind = spec_fields[key].type
            if kind == "int":
                spec_kwargs[key] = int(text)
            elif kind == "float":
                spec_kwargs[key] = float(text)
            elif kind == "date":
                spec_kwargs[key] = date.fromisoformat(text)
            else:
                spec_kwargs[key] = text
        else:
            raise ValueError(f"{path}: unknown key {key!r}")
    return FixtureSpec(faults=FaultPlan(**fault_kwargs), **spec_kwargs)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="gen-fixture", description="Generate a synthetic AVL fixture.")
    parser.add_argument("--spec", required=True, help="key-value fixture spec file")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    try:
        spec = load_spec(args.spec)
        paths = generate(spec, args.out)
    except (OSError, ValueError) as exc:
        print(f"gen-fixture: {exc}", file=sys.stderr)
        return 2
    for name, path in sorted(paths.items()):
        print(f"{name}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
