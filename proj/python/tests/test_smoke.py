"""End-to-end smoke tests for the python module against the shipped sample data."""

import json
import math
import os
import pathlib

import pytest

import mcdse

DATA = pathlib.Path(os.environ.get("MCDSE_DATA", "data"))


def read(path):
    return path.read_text()


@pytest.fixture(scope="module")
def digits_text():
    return read(DATA / "networks" / "digits.json")


@pytest.fixture(scope="module")
def letters_text():
    return read(DATA / "networks" / "letters.json")


@pytest.fixture(scope="module")
def platform_text():
    return read(DATA / "platforms" / "small.json")


@pytest.fixture(scope="module")
def planned(digits_text, letters_text, platform_text):
    return mcdse.plan(
        [digits_text, letters_text],
        platform_text,
        objective="fps",
        front_cap=3,
        joint_cap=50,
    )


def test_parse_and_enumerate(digits_text, platform_text):
    net = mcdse.parse_network(digits_text)
    platform = mcdse.parse_platform(platform_text)
    assert net.name == "digits"
    assert net.fps_target == pytest.approx(400.0)
    assert net.layer_count == 4
    assert net.total_ops() > 0

    points = mcdse.enumerate_points(net, platform, max_subgraphs=2)
    assert points
    front = mcdse.pareto_front(points)
    assert 0 < len(front) <= len(points)
    for p in front:
        assert p.latency_s > 0
        assert p.rsc.lut >= 0 and p.rsc.dsp >= 0
        assert 1 <= p.subgraphs <= 2


def test_plan_pipeline(planned):
    assert math.isfinite(planned.objective_value)
    assert planned.cycle_time_s > 0
    assert len(planned.fps) == 2
    assert all(f > 0 for f in planned.fps)
    assert planned.joint_index >= 0
    for sl in planned.slow_downs:
        assert mcdse.SLOWDOWN_FLOOR < sl <= 1.0

    table = planned.table
    assert table.entries
    per_group = {}
    for e in table.entries:
        assert e.slots >= 1
        assert e.data_elements > 0
        assert e.executions >= 1
        per_group[e.group] = per_group.get(e.group, 0) + e.slots
    for group, total in per_group.items():
        assert total == table.group_slots_total[group]

    design = json.loads(planned.design_json())
    assert {n["name"] for n in design["networks"]} == {"digits", "letters"}
    schedule = json.loads(planned.schedule_json())
    assert schedule["cycle_time_s"] > 0
    assert schedule["tasks"] and all("start_s" in t for t in schedule["tasks"])
    assert json.loads(planned.table_json())["entries"]


def test_simulate_policies(planned):
    aware = mcdse.simulate(planned, policy="aware", frames=3)
    assert len(aware.fps) == 2
    assert all(f > 0 for f in aware.fps)
    assert all(b > 0 for b in aware.delivered_bytes)
    assert all(len(frames) >= 1 for frames in aware.frame_times_s)

    first = mcdse.simulate(planned, policy="unaware", frames=3, seed=7)
    second = mcdse.simulate(planned, policy="unaware", frames=3, seed=7)
    assert first.fps == second.fps
    assert first.delivered_bytes == second.delivered_bytes


def test_compute_slots_worked_example():
    slots, total, max_error = mcdse.compute_slots([1e5, 2e5, 4e5], 7e5)
    assert slots == [1, 2, 4]
    assert total == 7
    assert max_error <= 1e-12


def test_error_mapping(digits_text, platform_text):
    with pytest.raises(mcdse.ParseError):
        mcdse.parse_network("{ not json")
    with pytest.raises(mcdse.ValidationError):
        mcdse.parse_network(json.dumps({"name": "empty", "layers": []}))
    with pytest.raises(mcdse.ConfigError):
        mcdse.plan([digits_text], platform_text, objective="sideways")

    tiny = json.loads(platform_text)
    tiny.update(lut=10, ff=10, dsp=1, bram=1)
    with pytest.raises(mcdse.InfeasibleError):
        mcdse.plan([digits_text], json.dumps(tiny))
