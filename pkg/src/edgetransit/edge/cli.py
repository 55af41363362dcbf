"""``edge`` entry point: one process runs one bus."""

from __future__ import annotations

import argparse
import json
import logging
import signal
import sys

from .config import ConfigError, load_config, parse_endpoint
from .ingest import IngestStats, SocketIngest, ingest_replay
from .node import run_pipeline


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="edge", description="Run the on-bus analytics pipeline.")
    parser.add_argument("--config", required=True, help="INI-style EdgeConfig file")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--replay", metavar="FILE", help="replay an AVL CSV file")
    source.add_argument("--listen", metavar="HOST:PORT", help="accept CSV lines on a socket")
    parser.add_argument("--speed", type=float, default=0.0, help="replay speed multiplier; 0 = as fast as possible")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        config = load_config(args.config)
    except (ConfigError, OSError) as exc:
        print(f"edge: {exc}", file=sys.stderr)
        return 2

    if args.replay:
        stats = IngestStats()
        try:
            source_iter = ingest_replay(args.replay, args.speed, stats)
        except (OSError, ValueError) as exc:
            print(f"edge: cannot replay {args.replay}: {exc}", file=sys.stderr)
            return 2
        result = run_pipeline(config, source_iter, ingest_stats=stats)
    else:
        host, port = parse_endpoint(args.listen)
        ingest = SocketIngest(host, port).start()
        logging.info("listening for AVL lines on %s:%d", *ingest.address)

        def _shutdown(signum, frame):
            logging.info("signal %d: flushing open trip and day", signum)
            ingest.stop()

        signal.signal(signal.SIGINT, _shutdown)
        signal.signal(signal.SIGTERM, _shutdown)
        result = run_pipeline(config, ingest, ingest_stats=ingest.stats)
    print(json.dumps(result.metrics.as_dict(), sort_keys=True))
    return result.status
