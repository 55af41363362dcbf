"""Render a :class:`HubReport` to CSV or SVG files.

Output is byte-stable for a given report: fixed row order, one decimal for
reals, no timestamps. Files are staged next to their destination and only
renamed into place once every file has been written.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from collections.abc import Sequence
from pathlib import Path
from xml.sax.saxutils import escape

from ..core import DAYPARTS
from .reports import BoxplotStats, HubReport

FORMATS = ("csv", "svg")


def _num(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return f"{value:.1f}"


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def daily_csv(report: HubReport) -> str:
    header = ["date", "trip_count", "avg_total_time"]
    for part in DAYPARTS:
        p = part.value
        header += [f"{p}_trip_count", f"{p}_avg_time_length", f"{p}_avg_moves", f"{p}_avg_stops"]
    header.append("edge_agrees")
    rows = []
    for r in report.daily:
        row = [r.date.isoformat(), r.trip_count, _num(r.avg_total_time)]
        for part in DAYPARTS:
            s = r.summary.daypart(part)
            row += [s.trip_count, _num(s.avg_time_length), _num(s.avg_moves), _num(s.avg_stops)]
        row.append("" if r.edge_agrees is None else str(r.edge_agrees).lower())
        rows.append(row)
    return _csv_text(header, rows)


def trips_csv(report: HubReport) -> str:
    header = ["date", "start_time", "trip_id", "total_move", "total_stop", "total_time_length"]
    rows = [
        [t.date.isoformat(), t.start_time.isoformat(), t.trip_id, t.total_move, t.total_stop, t.total_time_length]
        for t in report.trips
    ]
    return _csv_text(header, rows)


def missing_csv(report: HubReport) -> str:
    rows = [
        [e.route_name, e.date.isoformat(), e.scheduled_departure.strftime("%H:%M")]
        for e in report.missing or ()
    ]
    return _csv_text(["route_name", "date", "departure_time"], rows)


def boxplot_csv(report: HubReport) -> str:
    header = ["group", "n", "min", "q1", "median", "q3", "max", "outliers"]
    rows = [
        [b.label, b.n, _num(b.min), _num(b.q1), _num(b.median), _num(b.q3), _num(b.max),
         ";".join(_num(o) for o in b.outliers)]
        for b in report.boxplots
    ]
    return _csv_text(header, rows)


# -- SVG ---------------------------------------------------------------------

_W, _H, _PAD = 720, 360, 48


def _svg(body: list[str], title: str) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="11">'
    )
    title_el = f'<text x="{_W / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>'
    return "\n".join([head, title_el, *body, "</svg>"]) + "\n"


def _bars(labels: Sequence[str], values: Sequence[float], title: str, caption: Sequence[str] = ()) -> str:
    body = [
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD / 2}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
    ]
    top = max(values, default=0) or 1
    n = max(len(values), 1)
    slot = (_W - 1.5 * _PAD) / n
    plot_h = _H - 2 * _PAD
    for i, (label, value) in enumerate(zip(labels, values)):
        h = plot_h * value / top
        x = _PAD + i * slot + slot * 0.1
        y = _H - _PAD - h
        body.append(
            f'<rect x="{x:.1f}" y="{y:.1f}" width="{slot * 0.8:.1f}" height="{h:.1f}" fill="#4c78a8"/>'
        )
        cx = x + slot * 0.4
        text = caption[i] if caption else _num(value)
        body.append(f'<text x="{cx:.1f}" y="{y - 3:.1f}" text-anchor="middle">{escape(text)}</text>')
        if n <= 40:
            body.append(
                f'<text x="{cx:.1f}" y="{_H - _PAD + 14:.1f}" text-anchor="middle">{escape(label)}</text>'
            )
    return _svg(body, title)


def daily_svg(report: HubReport) -> str:
    labels = [r.date.strftime("%m-%d") for r in report.daily]
    counts = [r.trip_count for r in report.daily]
    captions = [
        f"{r.trip_count} / {_num(r.avg_total_time)}s" if r.trip_count else "0" for r in report.daily
    ]
    return _bars(labels, counts, "Trips per day (count / average trip time)", captions)


def trips_svg(report: HubReport) -> str:
    labels = [f"{t.date.strftime('%d')} {t.start_time.strftime('%H:%M')}" for t in report.trips]
    values = [t.total_time_length for t in report.trips]
    return _bars(labels, values, "Total trip time (s)", [str(v) for v in values] if len(values) <= 40 else [""] * len(values))


def boxplot_svg(report: HubReport) -> str:
    stats: list[BoxplotStats] = report.boxplots
    body = [f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>']
    points = [v for b in stats for v in (b.min, b.max, *b.outliers)]
    lo, hi = (min(points), max(points)) if points else (0.0, 1.0)
    if hi == lo:
        lo, hi = lo - 1, hi + 1
    span = hi - lo
    plot_h = _H - 2 * _PAD

    def y(v: float) -> float:
        return _H - _PAD - plot_h * (v - lo) / span

    for tick in (lo, (lo + hi) / 2, hi):
        body.append(f'<text x="{_PAD - 4}" y="{y(tick) + 4:.1f}" text-anchor="end">{_num(tick)}</text>')
    slot = (_W - 1.5 * _PAD) / max(len(stats), 1)
    for i, b in enumerate(stats):
        cx = _PAD + slot * (i + 0.5)
        half = slot * 0.2
        body += [
            f'<line x1="{cx:.1f}" y1="{y(b.max):.1f}" x2="{cx:.1f}" y2="{y(b.q3):.1f}" stroke="black"/>',
            f'<line x1="{cx:.1f}" y1="{y(b.q1):.1f}" x2="{cx:.1f}" y2="{y(b.min):.1f}" stroke="black"/>',
            f'<rect x="{cx - half:.1f}" y="{y(b.q3):.1f}" width="{2 * half:.1f}" '
            f'height="{y(b.q1) - y(b.q3):.1f}" fill="#9ecae9" stroke="black"/>',
            f'<line x1="{cx - half:.1f}" y1="{y(b.median):.1f}" x2="{cx + half:.1f}" y2="{y(b.median):.1f}" stroke="black" stroke-width="2"/>',
        ]
        for v in (b.min, b.max):
            body.append(
                f'<line x1="{cx - half / 2:.1f}" y1="{y(v):.1f}" x2="{cx + half / 2:.1f}" y2="{y(v):.1f}" stroke="black"/>'
            )
        for v in b.outliers:
            body.append(f'<circle cx="{cx:.1f}" cy="{y(v):.1f}" r="3" fill="none" stroke="#d62728"/>')
        body.append(f'<text x="{cx:.1f}" y="{_H - _PAD + 14}" text-anchor="middle">{escape(b.label)} (n={b.n})</text>')
    return _svg(body, "Average trip time by daypart (s)")


def missing_svg(report: HubReport) -> str:
    body = []
    entries = report.missing or []
    if not entries:
        body.append(f'<text x="{_PAD}" y="{_PAD}">No missing departures.</text>')
    for i, e in enumerate(entries[:20]):
        text = f"{e.date.isoformat()} {e.scheduled_departure.strftime('%H:%M')} {e.route_name}"
        body.append(f'<text x="{_PAD}" y="{_PAD + 14 * i}">{escape(text)}</text>')
    if len(entries) > 20:
        body.append(f'<text x="{_PAD}" y="{_PAD + 14 * 20}">... {len(entries) - 20} more</text>')
    return _svg(body, f"Missing departures ({len(entries)})")


def render(report: HubReport, fmt: str) -> dict[str, str]:
    if fmt == "csv":
        files = {"daily.csv": daily_csv(report), "trips.csv": trips_csv(report), "boxplot.csv": boxplot_csv(report)}
        if report.missing is not None:
            files["missing.csv"] = missing_csv(report)
    elif fmt == "svg":
        files = {"daily.svg": daily_svg(report), "trips.svg": trips_svg(report), "boxplot.svg": boxplot_svg(report)}
        if report.missing is not None:
            files["missing.svg"] = missing_svg(report)
    else:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    if report.notes:
        files["notes.txt"] = "".join(note + "\n" for note in report.notes)
    return files


def export_report(report: HubReport, fmt: str, out_dir: str | Path) -> list[Path]:
    """Write every rendered file into ``out_dir`` all-or-nothing."""
    files = render(report, fmt)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    staged: list[tuple[str, Path]] = []
    try:
        for name, text in sorted(files.items()):
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out)
            staged.append((tmp, out / name))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.chmod(tmp, 0o644)  # mkstemp creates files private to the owner
    except BaseException:
        for tmp, _ in staged:
            Path(tmp).unlink(missing_ok=True)
        raise
    for tmp, dest in staged:
        os.replace(tmp, dest)
    return [dest for _, dest in staged]
