"""Edge analytics for transit AVL streams.

The edge side cleans raw tuples, labels each point Move or Stop, and folds
them into per-trip and per-day summaries that it ships to a hub. The hub
persists those summaries and builds the daily, daypart, box-plot and
missing-trip reports.
"""

from __future__ import annotations

from .analytics import annotate, finalize_day, finalize_trip, summarize_day, summarize_trip
from .core import (
    AvlTuple,
    DailySummary,
    Daypart,
    DaypartStats,
    GeoPoint,
    MotionLabel,
    TripSummary,
    classify_motion,
    great_circle_distance,
)
from .preprocess import clean_trip

__all__ = [
    "AvlTuple",
    "DailySummary",
    "Daypart",
    "DaypartStats",
    "GeoPoint",
    "MotionLabel",
    "TripSummary",
    "annotate",
    "classify_motion",
    "clean_trip",
    "finalize_day",
    "finalize_trip",
    "great_circle_distance",
    "summarize_day",
    "summarize_trip",
]
