"""End-to-end wiring: rounding -> grouping -> engine -> blue greedy -> legacy.

One Pipeline owns one engine and the concrete schedules derived from it.
Each trace event becomes zero or more engine events (frames for small jobs),
after which the high-multiplicity schedule is rebuilt from the engine's
associated solution and the per-job schedules follow it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil
from typing import Optional

from . import blue_greedy, grouping, legacy
from .core import MAKESPAN, Instance, as_rational, check_epsilon, group_speeds, objective_name
from .engine_cmax import CmaxEngine, NoSuchJob, check_recolours
from .engine_cmin import CminEngine
from .harness import DEFAULT_ORACLE_CAP, INSERT, REMOVE, OracleCapExceeded, brute_force_opt
from .lexsolver import Solver
from .rounding import round_job, round_speed, rounded_sizes

ROUNDED, NO_ROUNDING = "rounded", "no-rounding"


class ReplayError(RuntimeError):
    pass


@dataclass
class StepMetrics:
    step: int
    op: str
    p: Fraction
    objective: Fraction
    opt_grid: Fraction
    alpha: Fraction
    blue_count: int
    f: int
    F: Fraction
    phi: Fraction
    migration: Fraction
    budget: Fraction
    verdicts: dict = field(default_factory=dict)
    opt_star: Optional[Fraction] = None
    ratio: Optional[Fraction] = None
    large: bool = True
    dphi: Fraction = Fraction(0)

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())

    def as_row(self) -> dict:
        return {
            "step": self.step, "op": self.op, "p": self.p, "objective": self.objective,
            "opt_grid": self.opt_grid, "alpha": self.alpha, "blue_count": self.blue_count,
            "f": self.f, "F": self.F, "phi": self.phi, "migration": self.migration,
            "budget": self.budget, "ok": self.ok, "opt_star": self.opt_star, "ratio": self.ratio,
        }


def _and(into: dict, verdicts: dict):
    for k, v in verdicts.items():
        into[k] = into.get(k, True) and bool(v)


class Pipeline:
    def __init__(self, objective, epsilon, pmax, speeds, mode=ROUNDED):
        if mode not in (ROUNDED, NO_ROUNDING):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.objective = objective_name(objective)
        self.makespan = self.objective == MAKESPAN
        self.eps = check_epsilon(epsilon)
        self.pmax = as_rational(pmax)
        self.unit = self.eps * self.pmax
        self.speeds = tuple(as_rational(s) for s in speeds)
        self.m = len(self.speeds)
        if not self.m:
            raise ValueError("at least one machine is required")
        eng_speeds = [round_speed(s, self.eps, self.objective) for s in self.speeds]
        distinct, counts, self.mtype = group_speeds(eng_speeds)
        self.eng_speed = dict(enumerate(eng_speeds))
        if mode == ROUNDED:
            scaled = rounded_sizes(self.eps, self.objective)
            # the frame type comes first; it shares size 1 with the smallest rounded type
            sizes = [Fraction(1)] + scaled
            eng_pmax = 1 / self.eps
            self.frame = 0
            self.type_of_scaled = {v: t + 1 for t, v in enumerate(scaled)}
        else:
            lo = ceil(self.unit)
            sizes = [Fraction(p) for p in range(lo, int(self.pmax) + 1)]
            if not sizes:
                raise ValueError("no integer job size lies in [eps*pmax, pmax]")
            eng_pmax = self.pmax
            self.frame = None
        self.inst = Instance(self.eps, eng_pmax, tuple(sizes), tuple(distinct), tuple(counts), self.objective)
        self.solver = Solver(self.inst)
        self.engine = (CmaxEngine if self.makespan else CminEngine)(self.solver)
        self.d = self.inst.d
        self.large_types = set(range(self.d)) - ({self.frame} if self.frame is not None else set())

        self.hm = {i: (0,) * self.d for i in range(self.m)}
        self.blue_set = set()
        self.blue = blue_greedy.BlueAssignment(self.inst.sizes)
        self.overflow = blue_greedy.BlueAssignment(self.inst.sizes)
        self.ledger = grouping.FrameLedger.start(self.eps, self.pmax)
        self.small = grouping.SmallPlacement(range(self.m))
        self.legacy = legacy.LegacySchedule()
        self.next_id = 0
        self.small_ids = {}  # size -> stack of ids
        self.init_verdicts = {}
        self.forced_moves = 0  # legacy moves beyond the schedule's own, forced by which job was removed
        if mode == ROUNDED:
            # the ledger starts with one frame
            for _ in range(self.ledger.f):
                self._engine_event(INSERT, self.frame, self.init_verdicts)
            self._rebuild(self.init_verdicts)

    # -------------------------------------------------------------- engine
    def _engine_event(self, op, t, verdicts):
        before = self.engine.state
        self.engine.journal.clear()
        if op == INSERT:
            self.engine.insert(t)
        else:
            self.engine.remove(t)
        _and(verdicts, self.engine.check_invariants())
        _and(verdicts, self.engine.check_step_bounds(before, self.engine.state, op, t))
        verdicts["recolouring"] = verdicts.get("recolouring", True) and check_recolours(self.engine.journal, self.solver)

    def _large_type(self, p):
        if self.mode == ROUNDED:
            return self.type_of_scaled[round_job(p, self.eps, self.pmax, self.objective)]
        if p.denominator != 1 or p < self.unit:
            raise ReplayError(f"no-rounding mode needs integer sizes >= eps*pmax, got {p}")
        return self.inst.sizes.index(p)

    # -------------------------------------------------------------- schedule
    def _choose_blue(self, mu_b):
        new = set()
        for t in range(self.inst.tau):
            mine = sorted(i for i in range(self.m) if self.mtype[i] == t)
            keep = [i for i in mine if i in self.blue_set]
            if len(keep) > mu_b[t]:
                keep.sort(key=lambda i: (self.blue.load(i), -i))
                keep = keep[len(keep) - mu_b[t]:]
            extra = [i for i in mine if i not in keep][: mu_b[t] - len(keep)]
            new.update(keep + extra)
        return new

    def _assign_configs(self, sol, red):
        out = {}
        for t in range(self.inst.tau):
            pool = list(sol.configs_of_type(t))
            machines = sorted(i for i in red if self.mtype[i] == t)
            rest = []
            for i in machines:
                if self.hm[i] in pool:
                    pool.remove(self.hm[i])
                    out[i] = self.hm[i]
                else:
                    rest.append(i)
            for i in rest:
                prev = self.hm[i]
                c = min(pool, key=lambda c: sum(abs(a - b) for a, b in zip(c, prev)))
                pool.remove(c)
                out[i] = c
            if pool:
                raise ReplayError("configuration count does not match red machines")
        return out

    def _rebuild(self, verdicts):
        state = self.engine.state
        T = self.solver.governing_value(state.jobs)
        sol = self.solver.solve_associated(state, T)
        if sol is None:
            raise ReplayError("engine state has no feasible solution")
        new_blue = self._choose_blue(state.blue)
        red = set(range(self.m)) - new_blue
        configs = self._assign_configs(sol, red)
        bspeeds = {i: self.eng_speed[i] for i in sorted(new_blue)}
        target = sol.blue_jobs
        epm = self.inst.pmax
        if not self.makespan and not new_blue and any(target):
            # covering keeps surplus blue jobs when no machine is blue: spread them over all machines
            allspeeds = {i: self.eng_speed[i] for i in range(self.m)}
            bound = blue_greedy.moved_bound(self.overflow, target, allspeeds, epm)
            self.overflow, moved = blue_greedy.sync(self.overflow, target, allspeeds, epm)
            self.blue = blue_greedy.BlueAssignment(self.inst.sizes)
            placed = self.overflow
            speeds_used = allspeeds
        else:
            bound = blue_greedy.moved_bound(self.blue, target, bspeeds, epm)
            self.blue, moved = blue_greedy.sync(self.blue, target, bspeeds, epm)
            self.overflow = blue_greedy.BlueAssignment(self.inst.sizes)
            placed = self.blue
            speeds_used = bspeeds
        verdicts["blue_moved"] = moved <= bound
        verdicts["blue_proportional"] = blue_greedy.max_deviation(placed, speeds_used) <= epm
        blue_load = self.inst.load(target)
        if self.makespan:
            verdicts["blue_knapsack"] = blue_load <= state.alpha
            verdicts["blue_completion"] = all(
                self.blue.load(i) <= (1 + self.eps) ** 2 * s * T + epm for i, s in bspeeds.items()
            )
        else:
            verdicts["blue_knapsack"] = not new_blue or blue_load >= state.alpha
        hm = {}
        for i in range(self.m):
            if i in configs:
                vec = configs[i]
            else:
                vec = self.blue.counts(i)
            hm[i] = tuple(a + b for a, b in zip(vec, self.overflow.counts(i)))
        total = [0] * self.d
        for v in hm.values():
            total = [a + b for a, b in zip(total, v)]
        verdicts["hm_complete"] = tuple(total) == state.jobs
        prev_hm, self.hm, self.blue_set = self.hm, hm, new_blue
        return prev_hm

    def _frames(self, hm):
        if self.frame is None:
            return {}
        return {i: v[self.frame] for i, v in hm.items()}

    # -------------------------------------------------------------- events
    def _pick_removal(self, p, t):
        """Concrete job of size p to remove: prefer one on a machine whose count of
        type t dropped in the new schedule, newest first."""
        cands = sorted((j for j, s in self.legacy.size_of.items() if s == p), reverse=True)
        if not cands:
            raise NoSuchJob(f"no job of size {p}")
        have = self.legacy.counts()
        want = legacy.hm_counts(self.hm, self.large_types)
        for j in cands:
            i = self.legacy.machine_of[j]
            if have.get((i, t), 0) > want.get((i, t), 0):
                return j
        return cands[0]

    def _pick_small_removal(self, p, frames):
        # Equal sizes are interchangeable: take the copy whose machine keeps
        # the most room above its lower bound, newest first on ties.
        where = self.small.where()
        ids = self.small_ids[p]

        def room(k):
            i = where[ids[k]]
            return self.small.load(i) - p - (frames.get(i, 0) - 3) * self.unit

        k = max(range(len(ids)), key=lambda k: (room(k), k))
        return ids.pop(k)

    def step(self, n, op, p, oracle=False, oracle_cap=DEFAULT_ORACLE_CAP) -> StepMetrics:
        p = as_rational(p)
        if op not in (INSERT, REMOVE):
            raise ReplayError(f"unknown operation {op!r}")
        if not 0 < p <= self.pmax:
            raise ReplayError(f"size {p} outside (0, pmax]")
        verdicts = dict(self.init_verdicts) if n == 1 else {}
        is_large = grouping.partition(p, self.eps, self.pmax) == grouping.LARGE
        if self.mode == NO_ROUNDING and not is_large:
            raise ReplayError(f"no-rounding mode has no small jobs, got {p}")
        phi_before = self.ledger.phi
        removed, inserted = [], []
        small_removed, small_added = [], []
        if is_large:
            t = self._large_type(p)
            if op == REMOVE and not any(s == p for s in self.legacy.size_of.values()):
                raise NoSuchJob(f"step {n}: no job of size {p} to remove")
            self._engine_event(op, t, verdicts)
        else:
            ledger_before = self.ledger
            try:
                self.ledger, df = grouping.update_frames(self.ledger, op, p)
            except grouping.NoSuchSmallJob:
                raise NoSuchJob(f"step {n}: no job of size {p} to remove") from None
            _and(verdicts, grouping.frame_invariants(ledger_before, self.ledger, p))
            for _ in range(abs(df)):
                self._engine_event(INSERT if df > 0 else REMOVE, self.frame, verdicts)
            if op == INSERT:
                j = self.next_id
                self.next_id += 1
                self.small_ids.setdefault(p, []).append(j)
                small_added.append((j, p))
        prev_hm = self._rebuild(verdicts)

        xi = Fraction(0)
        if is_large:
            if op == INSERT:
                j = self.next_id
                self.next_id += 1
                inserted.append((j, t, p))
            else:
                removed.append(self._pick_removal(p, t))
        prev_legacy = self.legacy
        self.legacy, xi_large, moved = legacy.legacy_convert(prev_legacy, prev_hm, self.hm, removed, inserted, self.large_types)
        verdicts["legacy_follows"] = legacy.follows(self.legacy, self.hm, self.large_types)
        hm_moves = legacy.hm_migrations(
            prev_hm, self.hm,
            [t] if is_large and op == REMOVE else [], [t] if is_large and op == INSERT else [],
            self.large_types,
        )
        extra = sum(max(0, c - hm_moves.get(tt, 0)) for tt, c in moved.items())
        if self.mode == NO_ROUNDING:
            # one job per type the schedule itself migrated
            verdicts["legacy_per_type"] = extra == 0
        self.forced_moves += extra
        verdicts["legacy_bound"] = xi_large <= legacy.movement_bound(prev_hm, self.hm, prev_legacy, self.legacy, self.large_types)
        verdicts["legacy_xi"] = xi_large == legacy.step_migration(prev_legacy, self.legacy)
        xi += xi_large

        if self.frame is not None:
            frames_before, frames = self._frames(prev_hm), self._frames(self.hm)
            if not is_large and op == REMOVE:
                small_removed.append(self._pick_small_removal(p, frames))
            self.small, moved_small = grouping.place_small_jobs(self.small, frames, small_removed, small_added, self.unit)
            verdicts["small_sandwich"] = grouping.sandwich_ok(self.small, frames, self.unit)
            extra = sum((q for _, q in small_added), Fraction(0)) + (p if small_removed else 0)
            verdicts["small_moved"] = moved_small <= grouping.small_moved_bound(frames_before, frames, self.unit) + extra
            verdicts["frames_bounded"] = self.ledger.F <= self.ledger.f <= self.ledger.F + 3
            verdicts["frames_in_engine"] = self.engine.state.jobs[self.frame] == self.ledger.f
            xi += moved_small

        dphi = self.ledger.phi - phi_before
        budget = p if is_large else 3 * p - dphi
        value = self.objective_value()
        grid = self.solver.governing_value(self.engine.state.jobs)
        row = StepMetrics(
            step=n, op=op, p=p, objective=value, opt_grid=grid, alpha=self.engine.state.alpha,
            blue_count=sum(self.engine.state.blue), f=self.ledger.f if self.frame is not None else 0,
            F=self.ledger.F if self.frame is not None else Fraction(0),
            phi=self.ledger.phi if self.frame is not None else Fraction(0),
            migration=xi, budget=budget, verdicts=verdicts, large=is_large, dphi=dphi,
        )
        if oracle:
            self._oracle(row, oracle_cap)
        return row

    # -------------------------------------------------------------- reporting
    def machine_loads(self) -> dict:
        """Original-size load per machine."""
        out = {i: Fraction(0) for i in range(self.m)}
        for j, i in self.legacy.machine_of.items():
            out[i] += self.legacy.size_of[j]
        if self.frame is not None:
            for i in range(self.m):
                out[i] += self.small.load(i)
        return out

    def live_sizes(self) -> list:
        out = list(self.legacy.size_of.values())
        if self.frame is not None:
            out += list(self.small.size_of.values())
        return out

    def objective_value(self) -> Fraction:
        loads = self.machine_loads()
        comps = [loads[i] / self.speeds[i] for i in range(self.m)]
        if not self.live_sizes():
            return Fraction(0)
        return max(comps) if self.makespan else min(comps)

    def _oracle(self, row: StepMetrics, cap):
        jobs = self.live_sizes()
        if len(jobs) > cap:
            return
        try:
            opt = brute_force_opt(jobs, self.speeds, self.objective, cap)
        except OracleCapExceeded:
            return
        row.opt_star = opt
        if opt > 0:
            row.ratio = row.objective / opt
        eps = self.eps
        if self.mode == NO_ROUNDING:
            if self.makespan:
                row.verdicts["approx"] = row.objective <= (1 + eps) ** 3 * opt
            else:
                row.verdicts["approx"] = opt == 0 or row.objective >= (1 - eps) ** 3 * opt
        else:
            slack = self.unit * (4 + ceil(Fraction(3, self.m)))
            loads = self.machine_loads()
            if self.makespan:
                row.verdicts["approx"] = all(
                    loads[i] <= (1 + eps) ** 7 * self.speeds[i] * opt + slack for i in range(self.m)
                )
            else:
                row.verdicts["approx"] = all(
                    loads[i] >= (1 - eps) ** 7 * self.speeds[i] * opt - slack for i in range(self.m)
                )
