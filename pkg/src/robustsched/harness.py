"""Traces, the instance generator, the exact OPT* oracle, replay and CSV output."""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, lcm

from .core import COVERING, MAKESPAN, PowerGrid, as_rational, check_epsilon, objective_name

INSERT, REMOVE = "insert", "remove"
CSV_COLUMNS = ["step", "op", "p", "objective", "opt_grid", "alpha", "blue_count", "f", "F", "phi", "migration", "budget", "ok"]
ORACLE_COLUMNS = ["opt_star", "ratio"]
DEFAULT_ORACLE_CAP = 10


class TraceError(ValueError):
    def __init__(self, msg, line=None):
        super().__init__(f"line {line}: {msg}" if line is not None else msg)
        self.line = line


class OracleCapExceeded(RuntimeError):
    pass


@dataclass
class EventTrace:
    objective: str
    epsilon: Fraction
    pmax: Fraction
    speeds: tuple
    events: list = field(default_factory=list)  # (op, size)


def _rational(text, line):
    try:
        if "." in text or "e" in text.lower():
            raise ValueError
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise TraceError(f"not an exact rational: {text!r}", line) from None


def parse_trace(text: str) -> EventTrace:
    header = {}
    events = []
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        word, *rest = line.split()
        if word in ("objective", "epsilon", "pmax", "speeds"):
            if events:
                raise TraceError(f"header line {word!r} after the first event", n)
            if word in header:
                raise TraceError(f"duplicate header {word!r}", n)
            if not rest:
                raise TraceError(f"{word} needs a value", n)
            if word == "objective":
                if len(rest) != 1 or rest[0] not in ("cmax", "cmin"):
                    raise TraceError("objective must be cmax or cmin", n)
                header[word] = rest[0]
            elif word == "speeds":
                header[word] = tuple(_rational(x, n) for x in rest)
                if any(s <= 0 for s in header[word]):
                    raise TraceError("speeds must be positive", n)
            else:
                if len(rest) != 1:
                    raise TraceError(f"{word} takes one value", n)
                header[word] = _rational(rest[0], n)
            if word == "epsilon":
                e = header[word]
                if not 0 < e <= 1 or (1 / e).denominator != 1:
                    raise TraceError("1/epsilon must be a positive integer", n)
            if word == "pmax" and header[word] <= 0:
                raise TraceError("pmax must be positive", n)
        elif word in (INSERT, REMOVE):
            missing = {"objective", "epsilon", "pmax", "speeds"} - set(header)
            if missing:
                raise TraceError(f"event before header lines {sorted(missing)}", n)
            if len(rest) != 1:
                raise TraceError(f"{word} takes one size", n)
            p = _rational(rest[0], n)
            if not 0 < p <= header["pmax"]:
                raise TraceError(f"size {p} outside (0, pmax]", n)
            events.append((word, p))
        else:
            raise TraceError(f"unknown directive {word!r}", n)
    missing = {"objective", "epsilon", "pmax", "speeds"} - set(header)
    if missing:
        raise TraceError(f"missing header lines {sorted(missing)}")
    return EventTrace(header["objective"], header["epsilon"], header["pmax"], header["speeds"], events)


def format_trace(trace: EventTrace) -> str:
    out = [
        f"objective {trace.objective}",
        f"epsilon {trace.epsilon}",
        f"pmax {trace.pmax}",
        "speeds " + " ".join(str(s) for s in trace.speeds),
    ]
    out += [f"{op} {p}" for op, p in trace.events]
    return "\n".join(out) + "\n"


def generate(seed, machines, steps, pmax, epsilon, small_prob=0.0, objective=MAKESPAN, max_live=10,
             speed_exponents=(-2, 4)) -> EventTrace:
    """Deterministic random trace.  Large sizes are integers in [eps*pmax, pmax],
    small sizes are multiples of eps*pmax/8 below eps*pmax."""
    rng = random.Random(seed)
    eps = check_epsilon(epsilon)
    pmax = as_rational(pmax)
    if machines <= 0 or steps < 0:
        raise ValueError("machines must be positive and steps nonnegative")
    if not 0 <= small_prob <= 1:
        raise ValueError("small_prob must lie in [0, 1]")
    grid = PowerGrid(eps)
    speeds = tuple(grid.power(rng.randint(*speed_exponents)) for _ in range(machines))
    unit = eps * pmax
    large = list(range(ceil(unit), int(pmax) + 1)) or [pmax]
    live = []
    events = []
    for _ in range(steps):
        if live and (len(live) >= max_live or rng.random() < 0.4):
            p = live.pop(rng.randrange(len(live)))
            events.append((REMOVE, p))
            continue
        if small_prob and rng.random() < small_prob:
            p = unit * Fraction(rng.randint(1, 7), 8)
        else:
            p = Fraction(rng.choice(large))
        live.append(p)
        events.append((INSERT, p))
    return EventTrace(objective_name(objective), eps, pmax, speeds, events)


# ------------------------------------------------------------------ oracle

def brute_force_opt(jobs, speeds, objective=MAKESPAN, cap: int = DEFAULT_ORACLE_CAP) -> Fraction:
    """Exact optimum over all assignments of the jobs to the machines.

    Dynamic program over machines and sub-multisets of the jobs; machines of
    equal speed are filled in nonincreasing order of their sub-multiset index,
    which removes their permutations from the search."""
    jobs = [as_rational(p) for p in jobs]
    if len(jobs) > cap:
        raise OracleCapExceeded(f"{len(jobs)} jobs exceed the oracle cap {cap}")
    if not jobs:
        return Fraction(0)
    makespan = objective_name(objective) == MAKESPAN
    speeds = sorted((as_rational(s) for s in speeds), reverse=True)
    kinds = sorted(set(jobs))
    mult = [jobs.count(p) for p in kinds]
    den = lcm(*(p.denominator for p in kinds))
    isz = [int(p * den) for p in kinds]
    num = lcm(*(s.numerator for s in speeds))
    # completion of load L (in 1/den units) on machine k is L * w[k] / (den * num)
    w = [s.denominator * (num // s.numerator) for s in speeds]
    radix = [1]
    for c in mult[:-1]:
        radix.append(radix[-1] * (c + 1))
    size = radix[-1] * (mult[-1] + 1)
    vecs, loads = [], []
    for idx in range(size):
        v = [(idx // radix[j]) % (mult[j] + 1) for j in range(len(mult))]
        vecs.append(v)
        loads.append(sum(a * b for a, b in zip(v, isz)))
    subs_cache = {}

    def subs(r):
        hit = subs_cache.get(r)
        if hit is None:
            rv = vecs[r]
            hit = [0]
            for j, c in enumerate(rv):
                hit = [h + k * radix[j] for h in hit for k in range(c + 1)]
            subs_cache[r] = hit
        return hit

    m = len(speeds)
    same_next = [k + 1 < m and speeds[k + 1] == speeds[k] for k in range(m)]
    memo = {}

    def best(k, r, bound):
        # bound: largest sub-multiset index allowed on machine k (symmetry)
        key = (k, r, bound)
        hit = memo.get(key)
        if hit is not None:
            return hit
        if k == m - 1:
            res = loads[r] * w[k] if r <= bound else None
        else:
            res = None
            for c in subs(r):
                if c > bound:
                    continue
                here = loads[c] * w[k]
                if res is not None and (here >= res if makespan else here <= res):
                    continue
                rest = best(k + 1, r - c, c if same_next[k] else size)
                if rest is None:
                    continue
                v = max(here, rest) if makespan else min(here, rest)
                if res is None or (v < res if makespan else v > res):
                    res = v
        memo[key] = res
        return res

    top = size - 1
    return Fraction(best(0, top, size), den * num)


# ------------------------------------------------------------------ replay

def replay(trace: EventTrace, mode: str = "rounded", oracle: bool = False, oracle_cap: int = DEFAULT_ORACLE_CAP):
    from .pipeline import Pipeline

    pipe = Pipeline(trace.objective, trace.epsilon, trace.pmax, trace.speeds, mode=mode)
    rows = []
    for n, (op, p) in enumerate(trace.events, 1):
        rows.append(pipe.step(n, op, p, oracle=oracle, oracle_cap=oracle_cap))
    return rows, pipe


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    return str(v)


def metrics_csv(rows, oracle: bool = False) -> str:
    buf = io.StringIO()
    cols = CSV_COLUMNS + (ORACLE_COLUMNS if oracle else [])
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        rec = r.as_row()
        w.writerow([_cell(rec[c]) for c in cols])
    return buf.getvalue()


def failing(rows) -> list:
    """(step, verdict name) for every failed verdict."""
    return [(r.step, name) for r in rows for name, ok in r.verdicts.items() if not ok]


SELFTEST_CASES = [
    # (seed, machines, steps, pmax, epsilon, small_prob, objective, mode)
    (1, 3, 40, 4, Fraction(1, 2), 0.0, MAKESPAN, "no-rounding"),
    (2, 3, 40, 4, Fraction(1, 2), 0.0, COVERING, "no-rounding"),
    (3, 2, 40, 8, Fraction(1, 3), 0.0, MAKESPAN, "no-rounding"),
    (4, 4, 40, 1, Fraction(1), 0.0, COVERING, "no-rounding"),
    (5, 3, 40, 8, Fraction(1, 2), 0.5, MAKESPAN, "rounded"),
    (6, 3, 40, 8, Fraction(1, 2), 0.5, COVERING, "rounded"),
    (7, 2, 40, 4, Fraction(1, 3), 0.5, MAKESPAN, "rounded"),
]


def selftest(out=print) -> bool:
    ok = True
    for seed, m, k, pmax, eps, q, obj, mode in SELFTEST_CASES:
        trace = generate(seed, m, k, pmax, eps, q, obj)
        rows, _ = replay(trace, mode=mode, oracle=True)
        bad = failing(rows)
        out(f"{'PASS' if not bad else 'FAIL'} seed={seed} {obj} {mode} eps={eps} pmax={pmax} m={m} "
            f"steps={len(rows)} failures={len(bad)}" + (f" first={bad[0]}" if bad else ""))
        ok = ok and not bad
    return ok
