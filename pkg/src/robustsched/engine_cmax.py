"""Dynamic makespan state machine: Insert, TryBTR and Remove.

States are immutable; every function returns a new State.  Recolourings are
appended to an optional journal so callers can check that only critical
machines change colour.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple, Optional

from .lexsolver import PreconditionError, Solver, State, add_vec, unit_vec


class InvariantViolation(RuntimeError):
    """A situation the algorithm guarantees never arises; signals a bug."""


class NoSuchJob(ValueError):
    pass


class Recolour(NamedTuple):
    type: int
    count: int
    to_blue: bool
    value: Fraction  # grid value whose critical type was recoloured


def _check_type(solver: Solver, j: int):
    if not 0 <= j < solver.d:
        raise IndexError(f"job type {j} out of range 0..{solver.d - 1}")


def _opt_plus(solver, jobs):
    return solver.opt_grid(jobs)[1]


def _opt_minus(solver, jobs):
    return solver.opt_grid(jobs)[0]


def _free(solver, state, kappa) -> bool:
    return solver.is_free(state, kappa)


def _absorbs(solver, state) -> bool:
    return solver.is_valid(state)


def insert(state: State, j: int, solver: Solver, journal: Optional[list] = None) -> State:
    _check_type(solver, j)
    p_j = solver.inst.sizes[j]
    nu = state.jobs
    nu_new = add_vec(nu, unit_vec(solver.d, j))
    plus_old = _opt_plus(solver, nu)
    plus_new = _opt_plus(solver, nu_new)
    alpha, blue = state.alpha, state.blue
    if plus_new == plus_old:
        # "S is p_j-free" is decided by whether the job fits with the current
        # parameters; p_j-freeness implies this, and the red side may absorb
        # the job even when the blue slack is smaller than p_j.
        if not _absorbs(solver, State(alpha, blue, nu_new)):
            alpha = min(solver.base * plus_new * solver.blue_area(blue), alpha + p_j)
            if not _absorbs(solver, State(alpha, blue, nu_new)):
                t = solver.critical_type(plus_old)
                if t is None or blue[t] >= solver.counts[t]:
                    raise InvariantViolation("insert found no red critical machine to recolour")
                blue = add_vec(blue, unit_vec(solver.tau, t))
                alpha = alpha + solver.speeds[t] * plus_old + solver.inst.pmax
                if journal is not None:
                    journal.append(Recolour(t, 1, True, plus_old))
    else:
        if solver.is_valid(State(alpha, blue, nu_new)):
            alpha = solver.base * _opt_minus(solver, nu_new) * solver.blue_area(blue)
        else:
            alpha = alpha + p_j
    return State(alpha, blue, nu_new)


def try_btr(k: int, state: State, solver: Solver, journal: Optional[list] = None) -> State:
    """Recolour up to k critical machines blue to red."""
    if not any(state.blue):
        return state
    T = _opt_plus(solver, state.jobs)
    t = solver.critical_type(T)
    if t is None:
        return state
    k = min(k, state.blue[t])
    if k == 0:
        return state
    blue = add_vec(state.blue, unit_vec(solver.tau, t), -k)
    alpha = state.alpha - solver.base * k * solver.speeds[t] * T
    if journal is not None:
        journal.append(Recolour(t, k, False, T))
    return State(alpha, blue, state.jobs)


def remove(state: State, j: int, solver: Solver, journal: Optional[list] = None) -> State:
    _check_type(solver, j)
    if state.jobs[j] <= 0:
        raise NoSuchJob(f"no job of type {j} to remove")
    nu = state.jobs
    nu_new = add_vec(nu, unit_vec(solver.d, j), -1)
    plus_new = _opt_plus(solver, nu_new)
    t = solver.critical_type(plus_new)
    S = state
    if plus_new < _opt_plus(solver, nu):
        S = try_btr(solver.inst.m, S, solver, journal)
        S = S.replace(alpha=solver.base * plus_new * solver.blue_area(S.blue))
    S = S.replace(jobs=nu_new)
    pmax = solver.inst.pmax
    if t is not None and S.blue[t] > 0 and _free(solver, S, solver.eps * solver.ell + pmax):
        # A lightly loaded blue machine holds less than (1+eps)*ell of blue
        # work, so the drop can push alpha below zero; clamp it there.  The
        # recolouring is only kept when the result is valid, since the red
        # side may not absorb what the machine held.
        trial = try_btr(1, S, solver)
        trial = trial.replace(alpha=max(trial.alpha, 0))
        if solver.is_valid(trial):
            try_btr(1, S, solver, journal)
            S = trial
    if (t is None or S.blue[t] == 0) and _free(solver, S, pmax):
        floor_alpha = solver.base * _opt_minus(solver, nu_new) * solver.blue_area(S.blue)
        S = S.replace(alpha=max(S.alpha - pmax, floor_alpha))
    return S


# ---------------------------------------------------------------- checks

def check_invariants(state: State, solver: Solver) -> dict:
    """Verdicts for validity, colouring, the alpha bounds and the freeness cap."""
    out = {}
    minus, plus = solver.opt_grid(state.jobs)
    base = solver.base
    area = solver.blue_area(state.blue)
    valid = solver.is_T_valid(state, plus)
    out["valid"] = valid
    out["colouring"] = solver.colouring_ok(state.blue, plus)
    out["compatible"] = 0 <= state.alpha <= base * plus * area
    t = solver.critical_type(plus)
    if t is not None and state.blue[t] > 0:
        lower = base * plus * (area - solver.speeds[t])
        out["lower_bound"] = lower < state.alpha
    else:
        out["lower_bound"] = True
    if t is not None:
        delta = base * minus * (area - state.blue[t] * solver.speeds[t])
    else:
        delta = base * minus * area
    out["alpha_geq_delta"] = delta <= state.alpha
    if valid and state.alpha > delta:
        cap = solver.ell + 2 * solver.inst.pmax - 1
        out["freeness_cap"] = solver.max_freeness(state) <= cap
    else:
        out["freeness_cap"] = True
    return out


def check_recolours(journal, solver: Solver) -> bool:
    return all(solver.critical_type(r.value) == r.type for r in journal)


def check_step_bounds(before: State, after: State, op: str, j: int, solver: Solver) -> dict:
    """Parameter-change bounds of one insert or remove."""
    p_j = solver.inst.sizes[j]
    pmax = solver.inst.pmax
    ell = solver.ell
    d_alpha = after.alpha - before.alpha
    d_blue = sum(abs(a - b) for a, b in zip(after.blue, before.blue))
    if op == "insert":
        ok_alpha = 0 <= d_alpha <= ell + pmax + 2 * p_j
        ok_blue = d_blue <= 1
    else:
        ok_blue = d_blue <= (ell + 2 * pmax) / pmax + 1
        ok_alpha = abs(d_alpha) <= d_blue * solver.base * ell + ell + 4 * pmax
    return {"delta_alpha": ok_alpha, "delta_blue": ok_blue}


class CmaxEngine:
    """Holds the current state and applies insert/remove events."""

    objective = "cmax"

    def __init__(self, solver: Solver):
        if not solver.makespan:
            raise ValueError("CmaxEngine needs a makespan solver")
        self.solver = solver
        self.state = State.empty(solver.inst)
        self.journal: list = []

    def insert(self, j: int) -> State:
        self.state = insert(self.state, j, self.solver, self.journal)
        return self.state

    def remove(self, j: int) -> State:
        self.state = remove(self.state, j, self.solver, self.journal)
        return self.state

    def governing_value(self) -> Fraction:
        return _opt_plus(self.solver, self.state.jobs)

    def check_invariants(self) -> dict:
        return check_invariants(self.state, self.solver)

    def check_step_bounds(self, before, after, op, j) -> dict:
        return check_step_bounds(before, after, op, j, self.solver)


__all__ = [
    "CmaxEngine",
    "InvariantViolation",
    "NoSuchJob",
    "PreconditionError",
    "Recolour",
    "check_invariants",
    "check_recolours",
    "check_step_bounds",
    "insert",
    "remove",
    "try_btr",
]
