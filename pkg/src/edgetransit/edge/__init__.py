"""On-bus pipeline: ingest, reorder, clean, annotate, summarize, uplink."""

from __future__ import annotations

from .config import EdgeConfig, load_config
from .node import EdgeNode, run_pipeline
from .uplink import MemorySink, Uplink

__all__ = ["EdgeConfig", "EdgeNode", "MemorySink", "Uplink", "load_config", "run_pipeline"]
