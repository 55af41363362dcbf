from __future__ import annotations

import ast
import inspect
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import edgetransit.fixtures as fixtures_module
from _support import fixture, run_rows, same
from edgetransit.core import GeoPoint, great_circle_distance
from edgetransit.edge import EdgeConfig
from edgetransit.fixtures import (
    FaultPlan,
    FixtureSpec,
    corrupt,
    corrupt_rows,
    drop_slots,
    expected_messages,
    generate,
    load_spec,
    main,
    read_csv,
)

STILL = dict(route=(GeoPoint(46.0878, -64.7782),), gps_noise_m=0.0, trip_duration_jitter_s=0)


def only_trip(fx):
    (payload,) = [m["payload"] for m in fx.ground_truth if m["type"] == "trip_summary"]
    return payload


def test_stationary_trip():
    fx = fixture(trip_duration_mean_s=60, **STILL)
    assert len(fx.rows) == 13
    p = only_trip(fx)
    assert (p["total_move"], p["total_stop"], p["total_time_length"]) == (0, 13, 60)


def test_twenty_metres_per_step_is_all_move():
    line = (GeoPoint(45.0, -64.7782), GeoPoint(46.0, -64.7782))
    fx = fixture(trip_duration_mean_s=60, trip_duration_jitter_s=0, route=line, gps_noise_m=0.0,
                 cruise_speed_mps=4.0, dwell_pattern=())
    points = [GeoPoint(float(r[1]), float(r[2])) for r in fx.rows]
    assert all(great_circle_distance(a, b) > 19.9 for a, b in zip(points, points[1:]))
    p = only_trip(fx)
    assert (p["total_move"], p["total_stop"]) == (12, 1)


def test_single_point_route_is_all_stop():
    fx = fixture(trips_morning=3, trip_duration_mean_s=300, **STILL)
    assert all(m["payload"]["total_move"] == 0 for m in fx.ground_truth if m["type"] == "trip_summary")


def test_same_seed_same_files(tmp_path):
    spec = FixtureSpec(seed=42, days=2, trips_morning=3, faults=FaultPlan(duplicate_rate=0.1))
    a = generate(spec, tmp_path / "a")
    b = generate(spec, tmp_path / "b")
    for key in a:
        assert a[key].read_bytes() == b[key].read_bytes(), key


def test_different_seed_different_feed():
    assert fixture(seed=1).rows != fixture(seed=2).rows


def test_ground_truth_order_and_shape():
    fx = fixture(days=2, trips_morning=2, trips_evening=1, trips_night=1)
    kinds = [m["type"] for m in fx.ground_truth]
    assert kinds == ["trip_summary"] * 4 + ["daily_summary"] + ["trip_summary"] * 4 + ["daily_summary"]
    daily = fx.ground_truth[4]["payload"]
    assert daily["afternoon"] == {"avg_time_length": None, "avg_moves": None, "avg_stops": None, "trip_count": 0}
    assert daily["morning"]["trip_count"] == 2


def test_overfull_window_is_rejected():
    with pytest.raises(ValueError):
        fixture(trips_evening=40, trip_duration_mean_s=600)


def test_zero_rates_are_identity():
    fx = fixture(trips_morning=2)
    out, manifest = corrupt_rows(fx.rows, FaultPlan(), seed=9)
    assert out == fx.rows
    assert sum(v for k, v in manifest.items() if k != "seed") == 0


def test_manifest_is_reproducible(tmp_path):
    fx = fixture(trip_duration_mean_s=495, trip_duration_jitter_s=0)
    assert len(fx.rows) == 100
    plan = FaultPlan(duplicate_rate=0.1)
    a = corrupt_rows(fx.rows, plan, seed=5)
    b = corrupt_rows(fx.rows, plan, seed=5)
    assert a == b and a[1]["duplicates"] > 0


def test_corrupt_file_writes_manifest(tmp_path):
    paths = generate(FixtureSpec(seed=3), tmp_path)
    manifest = corrupt(paths["avl"], tmp_path / "bad.csv", FaultPlan(malformed_rate=0.05), seed=3)
    assert json.loads((tmp_path / "bad.manifest.json").read_text()) == manifest
    _, rows = read_csv(tmp_path / "bad.csv")
    assert sum(len(r) < 18 for r in rows) == manifest["malformed"]


def test_drop_slots_boundary():
    fx = fixture(trip_duration_mean_s=1800, trip_duration_jitter_s=0)
    trip_id = fx.rows[0][4]
    kept, _ = run_rows(drop_slots(fx.rows, trip_id, 99))
    gone, result = run_rows(drop_slots(fx.rows, trip_id, 100))
    assert sum(m["type"] == "trip_summary" for m in kept) == 1
    assert sum(m["type"] == "trip_summary" for m in gone) == 0
    assert result.metrics.trips_dropped == 1


def test_drop_slots_needs_room():
    fx = fixture(trip_duration_mean_s=60, trip_duration_jitter_s=0)
    with pytest.raises(ValueError):
        drop_slots(fx.rows, fx.rows[0][4], 10)


def test_oracle_shares_nothing_with_analytics():
    tree = ast.parse(inspect.getsource(fixtures_module))
    imported = set()
    for node in ast.walk(tree):
        if isinstance(node, ast.ImportFrom) and node.level:
            imported.add(node.module)
            if node.module == "core":
                assert {a.name for a in node.names} <= {"CSV_COLUMNS", "CRITICAL_FIELDS", "GeoPoint",
                                                         "great_circle_distance"}
    assert imported <= {"core", "edge.config"}


def test_oracle_recount_matches_generator():
    fx = fixture(seed=11, days=2, trips_morning=2, trips_afternoon=1)
    assert expected_messages(fx.rows) == fx.ground_truth


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**63 - 1), st.integers(1, 3), st.integers(0, 4), st.integers(0, 3), st.integers(0, 2))
def test_round_trip(seed, days, morning, afternoon, evening):
    fx = fixture(seed=seed, days=days, trips_morning=morning, trips_afternoon=afternoon,
                 trips_evening=evening, trip_duration_mean_s=240)
    plan = FaultPlan(duplicate_rate=0.1, reorder_rate=0.3, reorder_max_s=15, field_missing_rate=0.05)
    dirty, _ = corrupt_rows(fx.rows, plan, seed)
    clean_out, _ = run_rows(fx.rows)
    dirty_out, _ = run_rows(dirty)
    assert same(clean_out, fx.ground_truth)
    assert same(dirty_out, fx.ground_truth)


def test_spec_file_and_cli(tmp_path, capsys):
    spec = tmp_path / "spec.ini"
    spec.write_text(
        "seed = 7\ndays = 2\ntrips_morning = 2\ntimezone = America/Moncton\n"
        "route = 46.0878 -64.7782; 46.0990 -64.7610\ndwell_pattern = 30:20, 200:40\n"
        "duplicate_rate = 0.1\nreorder_max_s = 10\n"
    )
    parsed = load_spec(spec)
    assert parsed.seed == 7 and parsed.faults.reorder_max_s == 10
    assert parsed.dwell_pattern == ((30, 20), (200, 40))
    assert main(["--spec", str(spec), "--out", str(tmp_path / "out")]) == 0
    names = {p.name for p in (tmp_path / "out").iterdir()}
    assert {"avl.csv", "ground_truth.json", "schedule.csv", "edge.ini", "avl_corrupted.csv"} <= names
    assert "avl:" in capsys.readouterr().out


def test_cli_rejects_bad_spec(tmp_path):
    spec = tmp_path / "spec.ini"
    spec.write_text("colour = blue\n")
    assert main(["--spec", str(spec), "--out", str(tmp_path / "out")]) == 2


def test_local_timezone_round_trip():
    # evening trips in Moncton end after midnight UTC but belong to the local day
    fx = fixture(days=2, trips_morning=1, trips_evening=2, timezone="America/Moncton")
    out, _ = run_rows(fx.rows, EdgeConfig(timezone="America/Moncton"))
    assert same(out, fx.ground_truth)
    assert [m["payload"]["date"] for m in out if m["type"] == "daily_summary"] == ["2017-02-14", "2017-02-15"]
