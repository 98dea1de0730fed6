from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from robustsched.blue_greedy import (
    BlueAssignment,
    BlueInfeasible,
    max_deviation,
    moved_bound,
    sync,
)


def test_deficit_greedy_example():
    out, moved = sync(BlueAssignment((2, 3)), (1, 2), {0: 1, 1: 1}, 3)
    assert out.loads == {0: 5, 1: 3}
    assert out.counts(0) == (1, 1) and out.counts(1) == (0, 1)
    assert moved == 0
    assert max_deviation(out, {0: 1, 1: 1}) <= 3


def test_rebalance_example():
    prev = BlueAssignment((2,), {0: [0], 1: [2]})
    out, moved = sync(prev, (2,), {0: 1, 1: 1}, 2)
    assert out.loads == {0: 2, 1: 2}
    assert moved == 2


def test_noop():
    prev = BlueAssignment((1, 2), {0: [1, 1], 1: [2, 0]})
    out, moved = sync(prev, (3, 1), {0: 1, 1: 1}, 2)
    assert out.per_machine == prev.per_machine and moved == 0


def test_errors():
    with pytest.raises(ValueError):
        sync(BlueAssignment((5,)), (1,), {0: 1}, 4)
    with pytest.raises(BlueInfeasible):
        sync(BlueAssignment((1,)), (1,), {}, 4)
    out, moved = sync(BlueAssignment((1,)), (0,), {}, 4)
    assert out.per_machine == {} and moved == 0


def test_departed_machine_jobs_count_as_moved():
    prev = BlueAssignment((1,), {0: [2], 1: [2]})
    out, moved = sync(prev, (4,), {0: 1}, 1)
    assert out.loads == {0: 4}
    assert moved == 2 <= moved_bound(prev, (4,), {0: 1}, 1)


speeds = st.sampled_from([F(1), F(3, 2), F(9, 4), F(2), F(4)])


@st.composite
def sync_steps(draw):
    sizes = tuple(sorted(draw(st.sets(st.integers(1, 4), min_size=1, max_size=3))))
    pmax = 4
    steps = []
    for _ in range(draw(st.integers(1, 6))):
        ids = draw(st.sets(st.integers(0, 4), min_size=1, max_size=4))
        blue = {i: draw(speeds) for i in sorted(ids)}
        target = tuple(draw(st.integers(0, 4)) for _ in sizes)
        steps.append((blue, target))
    return sizes, pmax, steps


@settings(max_examples=200, deadline=None)
@given(sync_steps())
def test_sync_properties(case):
    sizes, pmax, steps = case
    cur = BlueAssignment(sizes)
    for blue, target in steps:
        nxt, moved = sync(cur, target, blue, pmax)
        assert nxt.total() == target
        assert set(nxt.per_machine) == set(blue)
        assert sum(nxt.loads.values()) == sum(p * c for p, c in zip(sizes, target))
        assert max_deviation(nxt, blue) < pmax
        if set(blue) <= set(cur.per_machine) or not cur.per_machine:
            # the formula has no term for machines joining the blue set
            assert moved <= moved_bound(cur, target, blue, pmax)
        cur = nxt


def test_joining_machine_outside_formula():
    prev = BlueAssignment((3,), {0: [3]})
    out, moved = sync(prev, (3,), {0: 1, 1: 1}, 4)
    assert out.loads == {0: 6, 1: 3}
    assert moved == 3 and moved_bound(prev, (3,), {0: 1, 1: 1}, 4) == 0
