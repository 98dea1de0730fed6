from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from robustsched.grouping import (
    LARGE,
    SMALL,
    FrameLedger,
    NoSuchSmallJob,
    SmallPlacement,
    frame_invariants,
    partition,
    place_small_jobs,
    potential,
    sandwich_ok,
    small_moved_bound,
    update_frames,
)


def test_partition_examples():
    assert partition(4, F(1, 2), 8) == LARGE
    assert partition(3, F(1, 2), 8) == SMALL
    assert partition(8, F(1, 2), 8) == LARGE


def test_start():
    led = FrameLedger.start(F(1, 2), 8)
    assert (led.unit, led.f, led.F, led.phi) == (4, 1, 0, 0)


def test_frame_reset_example():
    before = FrameLedger(F(1), 1, F(4, 5), (F(4, 5),))
    after, df = update_frames(before, "insert", F(2, 5))
    assert after.F == F(6, 5) and after.f == 3 and df == 2
    verdicts = frame_invariants(before, after, F(2, 5))
    assert all(verdicts.values()), verdicts


def test_no_change_inside_window():
    before = FrameLedger(F(1), 3, F(1), (F(1, 2), F(1, 2)))
    after, df = update_frames(before, "remove", F(1, 2))
    assert df == 0 and after.f == 3 and after.jobs == (F(1, 2),)


def test_remove_errors():
    led = FrameLedger.start(1, 1)
    with pytest.raises(NoSuchSmallJob):
        update_frames(led, "remove", F(1, 2))
    with pytest.raises(ValueError):
        update_frames(led, "insert", 1)


def test_potential_shape():
    assert potential(3, F(3, 2), 1) == 0
    assert potential(5, F(1), 1) == 3 * 2
    assert potential(1, F(3), 1) == 3 * 3


def test_place_empty():
    out, moved = place_small_jobs(SmallPlacement([0, 1]), {0: 2, 1: 1}, [], [], 1)
    assert out.per_machine == {0: [], 1: []} and moved == 0


def test_place_single_job():
    out, moved = place_small_jobs(SmallPlacement([0, 1]), {0: 1, 1: 0}, [], [(7, F(1, 2))], 1)
    assert out.per_machine == {0: [7], 1: []} and moved == 0
    assert sandwich_ok(out, {0: 1, 1: 0}, 1)


def test_place_overflow_after_frame_removal():
    prev = SmallPlacement([0, 1], {1: F(3, 5), 2: F(3, 5)}, {0: [1, 2], 1: []})
    frames = {0: 0, 1: 2}
    out, moved = place_small_jobs(prev, frames, [], [], 1)
    assert out.per_machine == {0: [1], 1: [2]}
    assert moved == F(3, 5) <= small_moved_bound({0: 1, 1: 1}, frames, 1)
    assert sandwich_ok(out, frames, 1)


def test_place_tops_up_machine_that_gained_frames():
    size = {j: F(1, 2) for j in range(10)}
    prev = SmallPlacement([0, 1], size, {0: list(range(10)), 1: []})
    frames = {0: 1, 1: 5}
    out, moved = place_small_jobs(prev, frames, [], [], 1)
    assert sandwich_ok(out, frames, 1)
    assert moved <= small_moved_bound({0: 5, 1: 1}, frames, 1)


@st.composite
def small_runs(draw):
    m = draw(st.integers(1, 4))
    events = draw(st.lists(st.tuples(st.booleans(), st.integers(1, 7), st.integers(0, 10**6)), max_size=40))
    return m, events


@settings(max_examples=150, deadline=None)
@given(small_runs())
def test_frames_and_placement_along_runs(run):
    m, events = run
    unit = F(1)
    led = FrameLedger(unit)
    machines = list(range(m))
    frames = {i: (1 if i == 0 else 0) for i in machines}
    place = SmallPlacement(machines)
    ids = {}
    next_id = 0
    for ins, k, salt in events:
        p = F(k, 8)
        if not ins and p not in led.jobs:
            continue
        before = led
        led, df = update_frames(led, "insert" if ins else "remove", p)
        assert all(frame_invariants(before, led, p).values())
        assert led.F <= led.f <= led.F + 3
        # spread the frame change over machines like an engine might
        old = dict(frames)
        for step in range(abs(df)):
            i = machines[(salt + step) % m]
            if df > 0:
                frames[i] += 1
            else:
                i = max(machines, key=lambda x: (frames[x], (x + salt) % m))
                frames[i] -= 1
        assert sum(frames.values()) == led.f
        if ins:
            added, removed = [(next_id, p)], []
            ids.setdefault(p, []).append(next_id)
            next_id += 1
        else:
            added, removed = [], [ids[p].pop()]
        place, moved = place_small_jobs(place, frames, removed, added, unit)
        assert sandwich_ok(place, frames, unit)
        assert moved <= small_moved_bound(old, frames, unit) + p
