"""HTTP face of the hub: message intake plus read-only report queries."""

from __future__ import annotations

from datetime import date
from typing import Any, Optional

from fastapi import Body, FastAPI, HTTPException, Query
from pydantic import BaseModel

from ..core import DAYPARTS
from .reports import ScheduleEntry, build_report
from .service import HubService


class DaypartOut(BaseModel):
    trip_count: int
    avg_time_length: Optional[float]
    avg_moves: Optional[float]
    avg_stops: Optional[float]


class DailyOut(BaseModel):
    date: date
    trip_count: int
    avg_total_time: Optional[float]
    morning: DaypartOut
    afternoon: DaypartOut
    evening: DaypartOut
    edge_agrees: Optional[bool]


class TripOut(BaseModel):
    trip_id: str
    date: date
    start_time: str
    total_move: int
    total_stop: int
    total_time_length: int


class BoxplotOut(BaseModel):
    label: str
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    outliers: list[float]


class MissingOut(BaseModel):
    route_name: str
    date: date
    departure_time: str


class HealthOut(BaseModel):
    messages: int
    received: int
    duplicates: int
    rejected: int
    malformed: int


def create_app(service: HubService, schedule: list[ScheduleEntry] | None = None) -> FastAPI:
    app = FastAPI(title="edgetransit hub")

    def _report(start: date, end: date, tolerance_min: float = 20):
        if end < start:
            raise HTTPException(422, "'to' precedes 'from'")
        return build_report(service.log.snapshot(start, end), start, end, schedule, tolerance_min)

    @app.get("/health", response_model=HealthOut)
    def health():
        return HealthOut(
            messages=len(service.log),
            received=service.received,
            duplicates=service.duplicates,
            rejected=service.rejected,
            malformed=service.malformed,
        )

    @app.post("/messages")
    def post_message(message: Any = Body(...)):
        reply = service.handle(message)
        if reply is None:
            raise HTTPException(400, "message_id missing")
        if "err" in reply:
            raise HTTPException(422, detail=reply)
        return reply

    @app.get("/reports/daily", response_model=list[DailyOut])
    def daily(start: date = Query(alias="from"), end: date = Query(alias="to")):
        out = []
        for r in _report(start, end).daily:
            parts = {
                p.value: DaypartOut(
                    trip_count=r.summary.daypart(p).trip_count,
                    avg_time_length=r.summary.daypart(p).avg_time_length,
                    avg_moves=r.summary.daypart(p).avg_moves,
                    avg_stops=r.summary.daypart(p).avg_stops,
                )
                for p in DAYPARTS
            }
            out.append(
                DailyOut(
                    date=r.date,
                    trip_count=r.trip_count,
                    avg_total_time=r.avg_total_time,
                    edge_agrees=r.edge_agrees,
                    **parts,
                )
            )
        return out

    @app.get("/reports/trips", response_model=list[TripOut])
    def trips(start: date = Query(alias="from"), end: date = Query(alias="to")):
        return [
            TripOut(
                trip_id=t.trip_id,
                date=t.date,
                start_time=t.start_time.isoformat(),
                total_move=t.total_move,
                total_stop=t.total_stop,
                total_time_length=t.total_time_length,
            )
            for t in _report(start, end).trips
        ]

    @app.get("/reports/boxplot", response_model=list[BoxplotOut])
    def boxplots(start: date = Query(alias="from"), end: date = Query(alias="to")):
        return [
            BoxplotOut(
                label=b.label, n=b.n, min=b.min, q1=b.q1, median=b.median,
                q3=b.q3, max=b.max, outliers=list(b.outliers),
            )
            for b in _report(start, end).boxplots
        ]

    @app.get("/reports/missing", response_model=list[MissingOut])
    def missing(
        start: date = Query(alias="from"),
        end: date = Query(alias="to"),
        tolerance_min: float = Query(20, ge=0),
    ):
        if schedule is None:
            raise HTTPException(404, "hub was started without a schedule")
        return [
            MissingOut(
                route_name=e.route_name,
                date=e.date,
                departure_time=e.scheduled_departure.strftime("%H:%M"),
            )
            for e in _report(start, end, tolerance_min).missing
        ]

    return app
