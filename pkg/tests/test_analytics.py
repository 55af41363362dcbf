from __future__ import annotations

import math
from datetime import date, datetime, time, timedelta, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgetransit.analytics import (
    DayState,
    SequencingError,
    TripState,
    annotate,
    daypart_of,
    finalize_day,
    finalize_trip,
    fold_trip_into_day,
    summarize_day,
    summarize_trip,
)
from edgetransit.core import (
    EARTH_RADIUS_M,
    NA,
    AvlTuple,
    Daypart,
    GeoPoint,
    MotionLabel,
    TripSummary,
    great_circle_distance,
)

T0 = datetime(2017, 2, 14, 12, 0, tzinfo=timezone.utc)
ORIGIN = GeoPoint(46.0878, -64.7782)
DAY = date(2017, 2, 14)


def avl(t: int, north_m: float = 0.0, trip_id: str = "A") -> AvlTuple:
    p = GeoPoint(ORIGIN.latitude + math.degrees(north_m / EARTH_RADIUS_M), ORIGIN.longitude)
    return AvlTuple(
        T0 + timedelta(seconds=t), p, "51", trip_id, DAY, time(8), NA,
        "bus", "drv", NA, NA, NA, NA, NA, NA, NA, NA,
    )


def trip(n: int, start: time, seconds: int, moves: int = 0) -> TripSummary:
    return TripSummary(f"t{start}", DAY, start, moves, n - moves, seconds)


def batch_counts(tuples: list[AvlTuple]) -> tuple[int, int]:
    """Straight-line recount: first point Stop, then the strict 15 m rule."""
    stops = 1
    for a, b in zip(tuples, tuples[1:]):
        if round(great_circle_distance(a.position, b.position), 6) < 15.0:
            stops += 1
    return len(tuples) - stops, stops


# -- annotate / finalize_trip ---------------------------------------------


def test_first_tuple_is_stop():
    state = TripState("A")
    assert annotate(state, avl(0, 50.0)).label is MotionLabel.STOP
    assert (state.move_count, state.stop_count) == (0, 1)


def test_second_tuple_far_is_move():
    state = TripState("A")
    annotate(state, avl(0))
    assert annotate(state, avl(5, 111.19)).label is MotionLabel.MOVE
    assert state.move_count == 1


def test_second_tuple_same_place_is_stop():
    state = TripState("A")
    annotate(state, avl(0))
    annotate(state, avl(5))
    assert state.stop_count == 2


def test_annotate_rejects_foreign_trip_and_backwards_time():
    state = TripState("A")
    annotate(state, avl(10))
    with pytest.raises(SequencingError):
        annotate(state, avl(15, trip_id="B"))
    with pytest.raises(SequencingError):
        annotate(state, avl(10))


def test_single_tuple_trip():
    s = summarize_trip([avl(0)])
    assert (s.total_time_length, s.total_stop, s.total_move) == (0, 1, 0)


def test_stationary_13_tuples():
    s = summarize_trip([avl(5 * i) for i in range(13)])
    assert (s.total_time_length, s.total_stop, s.total_move) == (60, 13, 0)


def test_finalize_empty_state_fails():
    with pytest.raises(ValueError):
        finalize_trip(TripState("A"))


def alternating_trip() -> list[AvlTuple]:
    # ten tuples parked, ten tuples moving 20 m per step, and so on
    out, north = [], 0.0
    for i in range(540):
        if (i // 10) % 2 == 1:
            north += 20.0
        out.append(avl(5 * i, north))
    return out


def test_alternating_trip_matches_batch_recount():
    tuples = alternating_trip()
    s = summarize_trip(tuples)
    # 27 moving segments of 10 steps each, counted by hand
    assert (s.total_move, s.total_stop, s.total_time_length) == (270, 270, 2695)
    assert (s.total_move, s.total_stop) == batch_counts(tuples)


steps = st.lists(st.tuples(st.integers(1, 30), st.floats(0.0, 40.0)), min_size=0, max_size=80)


def build(steps_) -> list[AvlTuple]:
    out, t, north = [avl(0)], 0, 0.0
    for dt, dm in steps_:
        t += dt
        north += dm
        out.append(avl(t, north))
    return out


@given(steps)
def test_streaming_equals_batch(steps_):
    tuples = build(steps_)
    s = summarize_trip(tuples)
    assert (s.total_move, s.total_stop) == batch_counts(tuples)
    assert s.total_move + s.total_stop == len(tuples)
    assert s.total_time_length == int((tuples[-1].timestamp - tuples[0].timestamp).total_seconds())


@given(steps)
def test_annotation_prefix_stable(steps_):
    tuples = build(steps_)
    state = TripState("A")
    labels = [annotate(state, t).label for t in tuples]
    for k in range(1, len(tuples) + 1):
        prefix_state = TripState("A")
        assert [annotate(prefix_state, t).label for t in tuples[:k]] == labels[:k]


# -- dayparts -------------------------------------------------------------


@pytest.mark.parametrize(
    "t, part",
    [
        (time(8), Daypart.MORNING),
        (time(16, 30), Daypart.AFTERNOON),
        (time(3), Daypart.NONE),
        (time(5), Daypart.MORNING),
        (time(12, 59, 59), Daypart.MORNING),
        (time(13), Daypart.AFTERNOON),
        (time(18, 59), Daypart.AFTERNOON),
        (time(19), Daypart.EVENING),
        (time(23, 59, 59), Daypart.EVENING),
        (time(4, 59, 59), Daypart.NONE),
    ],
)
def test_daypart_of(t, part):
    assert daypart_of(t) is part


@given(st.times())
def test_daypart_total(t):
    assert daypart_of(t) in set(Daypart)


def test_fold_one_morning_trip():
    day = fold_trip_into_day(DayState(DAY), trip(600, time(8), 3056, moves=400))
    totals = day.totals[Daypart.MORNING]
    assert (totals.sum_time_length, totals.sum_moves, totals.sum_stops, totals.trip_count) == (3056, 400, 200, 1)


def test_fold_night_trip_is_ignored():
    day = fold_trip_into_day(DayState(DAY), trip(10, time(3), 50))
    assert all(t.trip_count == 0 for t in day.totals.values())


def test_fold_is_linear():
    one = trip(10, time(8), 50, 4)
    day = DayState(DAY)
    fold_trip_into_day(day, one)
    fold_trip_into_day(day, one)
    totals = day.totals[Daypart.MORNING]
    assert (totals.sum_time_length, totals.sum_moves, totals.sum_stops, totals.trip_count) == (100, 8, 12, 2)


def test_fold_rejects_other_date():
    with pytest.raises(ValueError):
        fold_trip_into_day(DayState(date(2017, 2, 15)), trip(10, time(8), 50))


def test_finalize_day_single_morning_trip_and_blank_evening():
    summary = finalize_day(fold_trip_into_day(DayState(DAY), trip(600, time(8), 3056)))
    assert summary.morning.avg_time_length == 3056
    assert summary.evening.avg_time_length is None
    assert summary.evening.avg_moves is None and summary.evening.avg_stops is None
    assert summary.evening.trip_count == 0


def test_afternoon_mean_of_two():
    summary = summarize_day(DAY, [trip(10, time(14), 2600), trip(10, time(15), 2800)])
    assert summary.afternoon.avg_time_length == 2700


trip_lists = st.lists(
    st.builds(
        lambda h, m, n, mv, sec: TripSummary(f"{h}{m}", DAY, time(h, m), min(mv, n), n - min(mv, n), sec),
        st.integers(0, 23), st.integers(0, 59), st.integers(1, 800), st.integers(0, 800), st.integers(0, 6000),
    ),
    max_size=40,
)


@given(trip_lists)
def test_daily_reconstruction(trips):
    summary = summarize_day(DAY, trips)
    for part in (Daypart.MORNING, Daypart.AFTERNOON, Daypart.EVENING):
        members = [t for t in trips if daypart_of(t.start_time) is part]
        stats = summary.daypart(part)
        assert stats.trip_count == len(members)
        if not members:
            assert stats.avg_time_length is None
            continue
        n = len(members)
        assert stats.avg_time_length * n == pytest.approx(sum(t.total_time_length for t in members), rel=1e-15)
        assert stats.avg_moves * n == pytest.approx(sum(t.total_move for t in members), rel=1e-15)
        assert stats.avg_stops * n == pytest.approx(sum(t.total_stop for t in members), rel=1e-15)
