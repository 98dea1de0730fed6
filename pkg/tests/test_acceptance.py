"""Acceptance criteria 1-9, one reported line each (see the terminal summary)."""

import random
import time
from fractions import Fraction as F
from math import ceil


from conftest import report
from oracles import brute_extreme_objective, brute_lex, random_tiny_ilp
from robustsched.harness import generate, replay
from robustsched.lexsolver import Solver
from robustsched.pipeline import NO_ROUNDING, ROUNDED, Pipeline

EPS = [F(1), F(1, 2), F(1, 3)]
PMAX = [1, 4, 8]
SEEDS = 50
STEPS = 40

_runs = {}


def run_cell(mode, objective, eps, pmax, small_prob):
    """Replay SEEDS traces with the oracle; returns (runs, seconds) where each
    run is (trace, [(row, loads)])."""
    key = (mode, objective, eps, pmax)
    if key not in _runs:
        start = time.perf_counter()
        out = []
        for s in range(SEEDS):
            m = 2 + s % 3
            trace = generate(s * 7 + pmax, m, STEPS, pmax, eps, small_prob, objective)
            pipe = Pipeline(trace.objective, trace.epsilon, trace.pmax, trace.speeds, mode=mode)
            steps = []
            for n, (op, p) in enumerate(trace.events, 1):
                row = pipe.step(n, op, p, oracle=True)
                steps.append((row, pipe.machine_loads()))
            out.append((trace, steps))
        _runs[key] = (out, time.perf_counter() - start)
    return _runs[key]


def cells(mode, objective, small_prob):
    for eps in EPS:
        for pmax in PMAX:
            runs, secs = run_cell(mode, objective, eps, pmax, small_prob)
            yield eps, pmax, runs, secs


CONFIGS = [
    (NO_ROUNDING, "cmax", 0.0),
    (NO_ROUNDING, "cmin", 0.0),
    (ROUNDED, "cmax", 0.5),
    (ROUNDED, "cmin", 0.5),
]


def all_rows():
    for mode, obj, q in CONFIGS:
        for eps, pmax, runs, _ in cells(mode, obj, q):
            for trace, steps in runs:
                for row, loads in steps:
                    yield (mode, obj, eps, pmax), trace, row, loads


def _approx(objective, limit, bound):
    bad, worst, slowest, steps = [], None, 0.0, 0
    for eps, pmax, runs, secs in cells(NO_ROUNDING, objective, 0.0):
        slowest = max(slowest, secs)
        factor = bound(eps)
        for trace, ss in runs:
            for row, loads in ss:
                steps += 1
                opt = row.opt_star
                if opt is None:
                    bad.append((eps, pmax, row.step, "no oracle value"))
                    continue
                comps = [loads[i] / s for i, s in enumerate(trace.speeds)]
                live = bool(sum(loads.values()))
                value = (max(comps) if objective == "cmax" else min(comps)) if live else F(0)
                if objective == "cmax":
                    ok = value <= factor * opt
                    r = value / opt if opt else F(1)
                else:
                    ok = opt == 0 or value >= factor * opt
                    r = value / opt if opt else None
                if r is not None and (worst is None or (r > worst if objective == "cmax" else r < worst)):
                    worst = r
                if not ok:
                    bad.append((eps, pmax, row.step))
    slow = slowest >= limit
    return bad, worst, slowest, steps, slow


def test_criterion_1_makespan_approximation():
    bad, worst, slowest, steps, slow = _approx("cmax", 60, lambda e: (1 + e) ** 3)
    ok = not bad and not slow
    report(1, ok, f"{steps} steps, {len(bad)} above (1+eps)^3 OPT*, worst ratio {worst} "
                  f"({float(worst):.4f}), slowest cell {slowest:.1f}s (limit 60s)")
    assert ok, bad[:5]


def test_criterion_2_covering_approximation():
    bad, worst, slowest, steps, slow = _approx("cmin", 60, lambda e: (1 - e) ** 3)
    ok = not bad and not slow
    report(2, ok, f"{steps} steps, {len(bad)} below (1-eps)^3 OPT*, worst ratio {worst} "
                  f"({float(worst):.4f}), slowest cell {slowest:.1f}s (limit 60s)")
    assert ok, bad[:5]


def test_criterion_3_rounded_pipeline():
    bad, slowest, steps = [], 0.0, 0
    for obj in ("cmax", "cmin"):
        for eps, pmax, runs, secs in cells(ROUNDED, obj, 0.5):
            slowest = max(slowest, secs)
            for trace, ss in runs:
                m = len(trace.speeds)
                slack = eps * pmax * (4 + ceil(F(3, m)))
                for row, loads in ss:
                    steps += 1
                    opt = row.opt_star
                    if opt is None:
                        bad.append((obj, eps, pmax, row.step, "no oracle value"))
                        continue
                    for i, s in enumerate(trace.speeds):
                        if obj == "cmax":
                            ok = loads[i] <= (1 + eps) ** 7 * s * opt + slack
                        else:
                            ok = loads[i] >= (1 - eps) ** 7 * s * opt - slack
                        if not ok:
                            bad.append((obj, eps, pmax, row.step, i))
    ok = not bad and slowest < 120
    report(3, ok, f"{steps} steps, {len(bad)} per-machine load violations, slowest cell {slowest:.1f}s (limit 120s)")
    assert ok, bad[:5]


VALIDITY = [
    "valid", "colouring", "compatible", "lower_bound", "upper_bound", "alpha_geq_delta",
    "alpha_leq_delta", "recolouring", "freeness_cap", "frames_bounded", "frames_reset",
    "frames_in_engine", "blue_proportional", "blue_completion", "small_sandwich", "hm_complete",
]


def _verdict_failures(names):
    bad, steps = [], 0
    for cfg, _, row, _ in all_rows():
        steps += 1
        for name in names:
            if not row.verdicts.get(name, True):
                bad.append((cfg, row.step, name))
    return bad, steps


def test_criterion_4_validity_suite():
    bad, steps = _verdict_failures(VALIDITY)
    report(4, not bad, f"{steps} steps over 4 configurations, {len(bad)} invariant failures")
    assert not bad, bad[:5]


def test_criterion_5_parameter_change_bounds():
    bad, steps = _verdict_failures(["delta_alpha", "delta_blue"])
    report(5, not bad, f"{steps} steps, {len(bad)} parameter-change bound violations")
    assert not bad, bad[:5]


def test_criterion_6_lex_solver_oracle():
    rng = random.Random(2024)
    bad = feasible = 0
    for _ in range(500):
        inst, state = random_tiny_ilp(rng)
        sol = Solver(inst).solve_associated(state)
        ref = brute_lex(inst, state)
        if ref is None:
            ok = sol is None
        else:
            feasible += 1
            ok = (sol is not None and sol.x == ref[1] and tuple(sol.blue_jobs) == tuple(ref[2])
                  and sol.objective == brute_extreme_objective(inst, state))
        bad += not ok
    report(6, bad == 0, f"500 tiny ILPs ({feasible} feasible), {bad} mismatches with exhaustive lex-min")
    assert bad == 0


def _max_ratio(objective, length, count):
    best = F(0)
    for s in range(count):
        trace = generate(1000 + s, 2 + s % 3, length, 4, F(1, 2), 0.0, objective)
        rows, _ = replay(trace, mode=NO_ROUNDING)
        best = max([best] + [r.migration / r.p for r in rows])
    return best


def test_criterion_7_migration_boundedness():
    # same number of events per length: 80x50, 20x200, 5x800
    maxima = {}
    for obj in ("cmax", "cmin"):
        maxima[obj] = [_max_ratio(obj, L, n) for L, n in ((50, 80), (200, 20), (800, 5))]
    constant = all(len(set(v)) == 1 for v in maxima.values())
    # amortized: xi <= beta * budget with budget = 3p - dPhi, and |dPhi| <= 3 eps pmax
    beta, zero_budget_moves, phi_bad = F(0), 0, 0
    for cfg, _, row, _ in all_rows():
        if cfg[0] != ROUNDED:
            continue
        eps, pmax = cfg[2], cfg[3]
        if abs(row.dphi) > 3 * eps * pmax:
            phi_bad += 1
        if row.budget > 0:
            beta = max(beta, row.migration / row.budget)
        elif row.migration > 0:
            zero_budget_moves += 1
    ok = constant and zero_budget_moves == 0 and phi_bad == 0
    shown = ", ".join(f"{o} {'/'.join(str(x) for x in v)}" for o, v in maxima.items())
    report(7, ok, f"max xi/p over lengths 50/200/800: {shown}; amortized beta {beta} "
                  f"({zero_budget_moves} moves with empty budget), {phi_bad} steps with |dPhi| > 3 eps pmax")
    assert ok


def test_criterion_8_frame_potential():
    bad, events = [], 0
    prev_f = {}
    for cfg, trace, row, _ in all_rows():
        if cfg[0] != ROUNDED:
            continue
        key = id(trace)
        f_before = prev_f.get(key, 1)
        prev_f[key] = row.f
        if row.large:
            if row.f != f_before:
                bad.append((cfg, row.step, "f changed on a large job"))
            continue
        events += 1
        unit = cfg[2] * cfg[3]
        df = row.f - f_before
        if unit * abs(df) + row.dphi > 3 * row.p:
            bad.append((cfg, row.step, "amortized"))
        if df != 0 and row.phi != 0:
            bad.append((cfg, row.step, "phi after reset"))
    report(8, not bad, f"{events} small-job events, {len(bad)} frame potential violations")
    assert not bad, bad[:5]


def test_criterion_9_legacy_consistency():
    bad, steps = _verdict_failures(["legacy_follows", "legacy_bound", "legacy_xi"])
    report(9, not bad, f"{steps} steps, {len(bad)} legacy follow/bound failures")
    assert not bad, bad[:5]
