from __future__ import annotations

import math
from datetime import datetime, time, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgetransit.core import (
    CSV_COLUMNS,
    EARTH_RADIUS_M,
    FIELD_NAMES,
    CoordinateError,
    GeoPoint,
    MotionLabel,
    classify_motion,
    format_timestamp,
    great_circle_distance,
    parse_time_of_day,
    parse_timestamp,
)

MONCTON = GeoPoint(46.0878, -64.7782)

# Spherical law of cosines evaluated offline for the 0.001 deg latitude pair.
COSINE_ORACLE_111 = 111.19493076987928


def cosine_law_distance(a: GeoPoint, b: GeoPoint) -> float:
    p1, p2 = math.radians(a.latitude), math.radians(b.latitude)
    dl = math.radians(b.longitude - a.longitude)
    c = math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dl)
    return EARTH_RADIUS_M * math.acos(max(-1.0, min(1.0, c)))


def north_of(p: GeoPoint, meters: float) -> GeoPoint:
    return GeoPoint(p.latitude + math.degrees(meters / EARTH_RADIUS_M), p.longitude)


lat = st.floats(-89.0, 89.0)
lon = st.floats(-179.0, 179.0)
points = st.builds(GeoPoint, lat, lon)


def test_schema_has_17_fields_and_18_columns():
    assert len(FIELD_NAMES) == 17
    assert len(CSV_COLUMNS) == 18
    assert CSV_COLUMNS[:3] == ("timestamp", "latitude", "longitude")


@pytest.mark.parametrize("lat_, lon_", [(90.5, 0.0), (-91.0, 0.0), (0.0, 180.1), (0.0, -200.0)])
def test_geopoint_rejects_out_of_range(lat_, lon_):
    with pytest.raises(CoordinateError):
        GeoPoint(lat_, lon_)


def test_identical_points_are_zero_apart():
    assert great_circle_distance(MONCTON, MONCTON) == 0.0


def test_thousandth_degree_of_latitude():
    d = great_circle_distance(MONCTON, GeoPoint(46.0888, -64.7782))
    assert d == pytest.approx(111.19, abs=0.05)
    assert d == pytest.approx(COSINE_ORACLE_111, rel=1e-6)


def test_antipodes_do_not_blow_up():
    d = great_circle_distance(GeoPoint(0.0, 0.0), GeoPoint(0.0, 180.0))
    assert d == pytest.approx(math.pi * EARTH_RADIUS_M)


@given(points, points)
def test_distance_is_symmetric(a, b):
    assert great_circle_distance(a, b) == great_circle_distance(b, a)


@given(points)
def test_distance_identity(a):
    assert great_circle_distance(a, a) == 0.0


@given(points, points, points)
def test_triangle_inequality(a, b, c):
    assert great_circle_distance(a, c) <= great_circle_distance(a, b) + great_circle_distance(b, c) + 1e-6


@given(
    st.floats(45.8, 46.2), st.floats(-65.0, -64.5), st.floats(45.8, 46.2), st.floats(-65.0, -64.5)
)
def test_haversine_matches_cosine_law_in_a_city_box(a1, o1, a2, o2):
    a, b = GeoPoint(a1, o1), GeoPoint(a2, o2)
    oracle = cosine_law_distance(a, b)
    # acos near 1 costs the oracle about R*sqrt(2*eps) = 0.13 m of resolution
    assert great_circle_distance(a, b) == pytest.approx(oracle, rel=5e-3, abs=0.2)


def test_classify_identical_is_stop():
    assert classify_motion(MONCTON, MONCTON) is MotionLabel.STOP


def test_classify_111m_is_move():
    assert classify_motion(MONCTON, GeoPoint(46.0888, -64.7782)) is MotionLabel.MOVE


@pytest.mark.parametrize(
    "meters, label",
    [(14.99, MotionLabel.STOP), (15.0, MotionLabel.MOVE), (15.01, MotionLabel.MOVE)],
)
def test_threshold_is_strict(meters, label):
    assert classify_motion(MONCTON, north_of(MONCTON, meters)) is label


@given(st.floats(-60.0, 60.0), st.floats(-170.0, 170.0))
def test_exactly_threshold_is_move_anywhere(lat_, lon_):
    p = GeoPoint(lat_, lon_)
    assert classify_motion(p, north_of(p, 15.0)) is MotionLabel.MOVE


@given(st.floats(0.0, 200.0), st.floats(0.0, 200.0))
def test_classifier_monotone_along_a_meridian(d1, d2):
    near, far = sorted((d1, d2))
    if near == far:
        return
    if classify_motion(MONCTON, north_of(MONCTON, near)) is MotionLabel.MOVE:
        assert classify_motion(MONCTON, north_of(MONCTON, far)) is MotionLabel.MOVE


@given(points, points)
def test_classifier_is_pure(a, b):
    assert classify_motion(a, b) == classify_motion(a, b)


def test_parse_timestamp_accepts_z_and_offsets():
    want = datetime(2017, 2, 14, 6, 0, 5, tzinfo=timezone.utc)
    assert parse_timestamp("2017-02-14T06:00:05Z") == want
    assert parse_timestamp("2017-02-14T02:00:05-04:00") == want
    assert parse_timestamp(" 2017-02-14T06:00:05.700Z ") == want


def test_parse_timestamp_rejects_naive():
    with pytest.raises(ValueError):
        parse_timestamp("2017-02-14T06:00:05")


def test_timestamp_round_trip():
    ts = datetime(2017, 2, 14, 23, 59, 55, tzinfo=timezone.utc)
    assert parse_timestamp(format_timestamp(ts)) == ts


@pytest.mark.parametrize("text, want", [("08:00", time(8)), ("16:30:15", time(16, 30, 15))])
def test_parse_time_of_day(text, want):
    assert parse_time_of_day(text) == want


@pytest.mark.parametrize("text", ["8", "8h00", "25:00", "aa:bb"])
def test_parse_time_of_day_rejects(text):
    with pytest.raises(ValueError):
        parse_time_of_day(text)
