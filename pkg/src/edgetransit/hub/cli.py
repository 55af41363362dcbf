"""``hub`` and ``report`` command-line entry points."""

from __future__ import annotations

import argparse
import logging
import sys
import threading
from datetime import date

from ..edge.config import parse_endpoint
from .export import FORMATS, export_report
from .reports import build_report, load_schedule
from .service import HubServer, HubService
from .store import read_records


def hub_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hub", description="Receive and persist edge summaries.")
    parser.add_argument("--listen", required=True, metavar="HOST:PORT", help="NDJSON uplink listener")
    parser.add_argument("--data-dir", required=True, help="directory for the append-only log")
    parser.add_argument("--http", metavar="HOST:PORT", help="also serve the HTTP API here")
    parser.add_argument("--schedule", help="schedule CSV used by the missing-trip endpoint")
    parser.add_argument("--no-fsync", action="store_true", help="skip fsync after each append")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    service = HubService(args.data_dir, fsync=not args.no_fsync)
    host, port = parse_endpoint(args.listen)
    server = HubServer(service, host, port)
    logging.info("hub listening on %s:%d, %d messages on record", *server.address, len(service.log))
    try:
        if args.http:
            import uvicorn

            from .api import create_app

            schedule = load_schedule(args.schedule) if args.schedule else None
            threading.Thread(target=server.serve_forever, name="hub", daemon=True).start()
            http_host, http_port = parse_endpoint(args.http)
            uvicorn.run(create_app(service, schedule), host=http_host, port=http_port, log_level="info")
        else:
            server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.close()
    return 0


def report_main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="report", description="Export hub reports for a date range.")
    parser.add_argument("--data-dir", required=True)
    parser.add_argument("--from", dest="start", required=True, type=date.fromisoformat)
    parser.add_argument("--to", dest="end", required=True, type=date.fromisoformat)
    parser.add_argument("--schedule", help="schedule CSV (route_name,date,departure_time)")
    parser.add_argument("--tolerance-min", type=float, default=20.0)
    parser.add_argument("--format", choices=FORMATS, default="csv")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING)

    schedule = load_schedule(args.schedule) if args.schedule else None
    records = read_records(args.data_dir, args.start, args.end)
    report = build_report(records, args.start, args.end, schedule, args.tolerance_min)
    try:
        paths = export_report(report, args.format, args.out)
    except OSError as exc:
        print(f"report: cannot write to {args.out}: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    for note in report.notes:
        print(f"note: {note}", file=sys.stderr)
    return 0
