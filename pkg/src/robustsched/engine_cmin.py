"""Dynamic machine-covering state machine: Remove', TryRTB and Insert'.

OPT- is the governing grid value here.  Both places that pick the type to
recolour use crit(OPT-(nu)); see the project notes for why the literal
crit(OPT+(nu)) is not used.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

from .engine_cmax import InvariantViolation, NoSuchJob, Recolour, _check_type
from .lexsolver import Solver, State, add_vec, unit_vec


def _grid(solver, jobs):
    return solver.opt_grid(jobs)


def remove_prime(state: State, j: int, solver: Solver, journal: Optional[list] = None) -> State:
    _check_type(solver, j)
    if state.jobs[j] <= 0:
        raise NoSuchJob(f"no job of type {j} to remove")
    p_j = solver.inst.sizes[j]
    nu = state.jobs
    nu_new = add_vec(nu, unit_vec(solver.d, j), -1)
    minus_old, _ = _grid(solver, nu)
    minus_new, plus_new = _grid(solver, nu_new)
    alpha, blue = state.alpha, state.blue
    if minus_new == minus_old:
        if not solver.is_valid(State(alpha, blue, nu_new)):
            alpha = max(solver.base * minus_new * solver.blue_area(blue), alpha - p_j)
            if not solver.is_valid(State(alpha, blue, nu_new)):
                t = solver.critical_type(minus_old)
                if t is None or blue[t] == 0:
                    raise InvariantViolation("remove' found no blue critical machine to recolour")
                blue = add_vec(blue, unit_vec(solver.tau, t), -1)
                alpha = alpha - solver.base * solver.speeds[t] * minus_old
                if journal is not None:
                    journal.append(Recolour(t, 1, False, minus_old))
    else:
        if solver.is_valid(State(alpha, blue, nu_new)):
            alpha = solver.base * plus_new * solver.blue_area(blue)
        else:
            alpha = alpha - p_j
    return State(alpha, blue, nu_new)


def try_rtb(k: int, state: State, solver: Solver, journal: Optional[list] = None) -> State:
    """Recolour up to k red machines of type crit(OPT-(nu)) blue."""
    red = solver.red_counts(state.blue)
    if not any(red):
        return state
    T = _grid(solver, state.jobs)[0]
    t = solver.critical_type(T)
    if t is None:
        return state
    k = min(k, red[t])
    if k == 0:
        return state
    blue = add_vec(state.blue, unit_vec(solver.tau, t), k)
    alpha = state.alpha + solver.base * k * solver.speeds[t] * T
    if journal is not None:
        journal.append(Recolour(t, k, True, T))
    return State(alpha, blue, state.jobs)


def insert_prime(state: State, j: int, solver: Solver, journal: Optional[list] = None) -> State:
    _check_type(solver, j)
    nu = state.jobs
    nu_new = add_vec(nu, unit_vec(solver.d, j))
    minus_new, plus_new = _grid(solver, nu_new)
    t = solver.critical_type(minus_new)
    S = state
    if minus_new > _grid(solver, nu)[0]:
        S = try_rtb(solver.inst.m, S, solver, journal)
        S = S.replace(alpha=solver.base * minus_new * solver.blue_area(S.blue))
    S = S.replace(jobs=nu_new)
    red = solver.red_counts(S.blue)
    if t is not None and red[t] > 0 and solver.is_free(S, solver.eps * solver.ell):
        S = try_rtb(1, S, solver, journal)
        red = solver.red_counts(S.blue)
    pmax = solver.inst.pmax
    if (t is None or red[t] == 0) and solver.is_free(S, pmax):
        ceiling = solver.base * plus_new * solver.blue_area(S.blue)
        S = S.replace(alpha=min(S.alpha + pmax, ceiling))
    return S


# ---------------------------------------------------------------- checks

def check_invariants(state: State, solver: Solver) -> dict:
    out = {}
    minus, plus = solver.opt_grid(state.jobs)
    base = solver.base
    area = solver.blue_area(state.blue)
    valid = solver.is_T_valid(state, minus)
    out["valid"] = valid
    out["colouring"] = solver.colouring_ok(state.blue, minus)
    out["compatible"] = state.alpha >= base * minus * area
    t = solver.critical_type(minus)
    if t is not None and state.blue[t] < solver.counts[t]:
        out["upper_bound"] = base * minus * (area + solver.speeds[t]) > state.alpha
    else:
        out["upper_bound"] = True
    extra = state.blue[t] * solver.speeds[t] if t is not None else 0
    delta = base * plus * (area + extra)
    out["alpha_leq_delta"] = state.alpha <= delta
    if valid and state.alpha < delta:
        cap = base * solver.ell + solver.inst.pmax - 1
        out["freeness_cap"] = solver.max_freeness(state) <= cap
    else:
        out["freeness_cap"] = True
    return out


def check_step_bounds(before: State, after: State, op: str, j: int, solver: Solver) -> dict:
    p_j = solver.inst.sizes[j]
    pmax = solver.inst.pmax
    ell = solver.ell
    base = solver.base
    d_alpha = after.alpha - before.alpha
    d_blue = sum(abs(a - b) for a, b in zip(after.blue, before.blue))
    if op == "insert":
        ok_blue = d_blue <= (base * ell + pmax) / (solver.eps * ell) + 1
        ok_alpha = 0 <= d_alpha <= d_blue * base * ell + base * ell + 3 * pmax
    else:
        ok_blue = d_blue <= 1
        if d_blue == 0:
            ok_alpha = -2 * p_j <= d_alpha <= 0
        else:
            ok_alpha = after.alpha > before.alpha - base * ell - p_j and d_alpha <= 0
    return {"delta_alpha": ok_alpha, "delta_blue": ok_blue}


class CminEngine:
    objective = "cmin"

    def __init__(self, solver: Solver):
        if solver.makespan:
            raise ValueError("CminEngine needs a covering solver")
        self.solver = solver
        self.state = State.empty(solver.inst)
        self.journal: list = []

    def insert(self, j: int) -> State:
        self.state = insert_prime(self.state, j, self.solver, self.journal)
        return self.state

    def remove(self, j: int) -> State:
        self.state = remove_prime(self.state, j, self.solver, self.journal)
        return self.state

    def governing_value(self) -> Fraction:
        return _grid(self.solver, self.state.jobs)[0]

    def check_invariants(self) -> dict:
        return check_invariants(self.state, self.solver)

    def check_step_bounds(self, before, after, op, j) -> dict:
        return check_step_bounds(before, after, op, j, self.solver)
