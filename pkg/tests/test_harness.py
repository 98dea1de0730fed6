from fractions import Fraction as F

import pytest
from click.testing import CliRunner
from hypothesis import given, settings, strategies as st

from oracles import brute_schedule_opt
from robustsched.cli import main
from robustsched.engine_cmax import NoSuchJob
from robustsched.harness import (
    CSV_COLUMNS,
    ORACLE_COLUMNS,
    OracleCapExceeded,
    TraceError,
    brute_force_opt,
    failing,
    format_trace,
    generate,
    metrics_csv,
    parse_trace,
    replay,
)

HEADER = "objective cmax\nepsilon 1/2\npmax 8\nspeeds 1 3/2\n"


# ---------------------------------------------------------------- traces

def test_parse_minimal():
    t = parse_trace(HEADER + "insert 5\n")
    assert t.events == [("insert", 5)]
    assert t.speeds == (1, F(3, 2)) and t.epsilon == F(1, 2)


def test_parse_rejects_bad_epsilon():
    with pytest.raises(TraceError):
        parse_trace(HEADER.replace("1/2", "2/5") + "insert 5\n")


def test_parse_rejects_oversize():
    with pytest.raises(TraceError) as e:
        parse_trace(HEADER + "insert 9\n")
    assert e.value.line == 5


@pytest.mark.parametrize("bad", [
    "insert 0.5\n", "insert\n", "frobnicate 3\n", "insert 1 2\n", "remove -1\n",
])
def test_parse_malformed(bad):
    with pytest.raises(TraceError):
        parse_trace(HEADER + bad)


def test_parse_header_rules():
    with pytest.raises(TraceError):
        parse_trace("insert 1\n")
    with pytest.raises(TraceError):
        parse_trace(HEADER + HEADER)
    with pytest.raises(TraceError):
        parse_trace("objective cmax\nepsilon 1\npmax 1\n")


def test_parse_comments_and_blank_lines():
    t = parse_trace("# demo\n" + HEADER + "\ninsert 4  # large\nremove 4\n")
    assert t.events == [("insert", 4), ("remove", 4)]


def test_format_round_trip():
    t = generate(3, 3, 30, 8, F(1, 2), 0.5)
    assert parse_trace(format_trace(t)) == t


def test_generate_examples():
    a = generate(9, 2, 25, 4, F(1, 2))
    assert a == generate(9, 2, 25, 4, F(1, 2))
    assert all(2 <= p <= 4 for _, p in a.events)
    empty = generate(9, 2, 0, 4, F(1, 2))
    assert empty.events == [] and len(empty.speeds) == 2


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 4), st.sampled_from([F(1), F(1, 2), F(1, 3)]),
       st.sampled_from([1, 4, 8]), st.sampled_from([0.0, 0.5]))
def test_generate_well_formed(seed, m, eps, pmax, q):
    t = generate(seed, m, 60, pmax, eps, q)
    live = []
    for op, p in t.events:
        assert 0 < p <= pmax
        if q == 0:
            assert p >= eps * pmax
        if op == "insert":
            live.append(p)
            assert len(live) <= 10
        else:
            live.remove(p)


# ---------------------------------------------------------------- oracle

def test_brute_force_examples():
    assert brute_force_opt([2, 3, 4], [1, 1], "cmax") == 5
    assert brute_force_opt([2, 3, 4], [1, 1], "cmin") == 4
    assert brute_force_opt([], [1, 1]) == 0


def test_brute_force_cap():
    with pytest.raises(OracleCapExceeded):
        brute_force_opt([1] * 11, [1], cap=10)


@settings(max_examples=120, deadline=None)
@given(
    st.lists(st.fractions(min_value=F(1, 4), max_value=4, max_denominator=4), max_size=6),
    st.lists(st.sampled_from([F(1), F(3, 2), F(2), F(9, 4), F(1, 2)]), min_size=1, max_size=3),
    st.sampled_from(["cmax", "cmin"]),
)
def test_brute_force_matches_enumeration(jobs, speeds, obj):
    assert brute_force_opt(jobs, speeds, obj) == brute_schedule_opt(jobs, speeds, obj)


# ---------------------------------------------------------------- replay

def test_replay_empty():
    rows, _ = replay(parse_trace(HEADER), oracle=True)
    assert rows == []
    assert metrics_csv(rows).strip() == ",".join(CSV_COLUMNS)


def test_replay_single_job():
    t = parse_trace("objective cmax\nepsilon 1\npmax 1\nspeeds 1\ninsert 1\n")
    rows, _ = replay(t, mode="no-rounding", oracle=True)
    assert rows[0].objective == 1 and rows[0].opt_star == 1 and rows[0].ratio == 1
    assert rows[0].ok


def test_replay_three_jobs():
    t = parse_trace("objective cmax\nepsilon 1/2\npmax 4\nspeeds 1 1\ninsert 2\ninsert 3\ninsert 4\n")
    rows, _ = replay(t, mode="no-rounding", oracle=True)
    assert rows[-1].opt_star == 5
    assert not failing(rows)


def test_replay_missing_job():
    t = parse_trace(HEADER + "insert 5\nremove 6\n")
    with pytest.raises(NoSuchJob):
        replay(t)


def test_csv_columns_and_determinism():
    t = generate(4, 3, 30, 8, F(1, 2), 0.5)
    a = metrics_csv(replay(t, oracle=True)[0], oracle=True)
    b = metrics_csv(replay(t, oracle=True)[0], oracle=True)
    assert a == b
    assert a.splitlines()[0] == ",".join(CSV_COLUMNS + ORACLE_COLUMNS)
    assert len(a.splitlines()) == 31


# ---------------------------------------------------------------- cli

def test_cli_gen_and_replay(tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, ["gen", "--seed", "1", "--machines", "3", "--steps", "20", "--pmax", "8",
                               "--epsilon", "1/2", "--small-prob", "0.5", "--objective", "cmin"])
    assert res.exit_code == 0
    path = tmp_path / "t.trace"
    path.write_text(res.output)
    out = tmp_path / "m.csv"
    res = runner.invoke(main, ["replay", str(path), "--oracle", "--csv", str(out)])
    assert res.exit_code == 0, res.output
    assert out.read_text().splitlines()[0].endswith("ok,opt_star,ratio")
    res = runner.invoke(main, ["replay", str(path), "--mode", "no-rounding"])
    assert res.exit_code == 2  # small jobs need the rounded pipeline


def test_cli_bad_trace(tmp_path):
    path = tmp_path / "bad.trace"
    path.write_text(HEADER + "insert 99\n")
    res = CliRunner().invoke(main, ["replay", str(path)])
    assert res.exit_code == 2 and "line 5" in res.output


def test_cli_bad_epsilon():
    res = CliRunner().invoke(main, ["gen", "--seed", "1", "--machines", "2", "--steps", "3", "--pmax", "4",
                                    "--epsilon", "2/5"])
    assert res.exit_code != 0


def test_cli_selftest():
    res = CliRunner().invoke(main, ["selftest"])
    assert res.exit_code == 0, res.output
    assert res.output.count("PASS") == 7
