"""Drive the makespan engine by hand and watch its state.

Three machines of speeds 4, 2 and 1 receive jobs of sizes 1 and 2.  After
every event we print the state (alpha, blue machine counts, job counts),
the grid value OPT+ that governs validity, and which machine types were
recoloured.  Blue machines appear once OPT+ is large enough that
s_t * OPT+ reaches the threshold ell.
"""

from robustsched.core import Instance
from robustsched.engine_cmax import CmaxEngine
from robustsched.lexsolver import Solver

inst = Instance(epsilon=1, pmax=2, sizes=(1, 2), speeds=(4, 2, 1), counts=(1, 1, 1))
solver = Solver(inst)
engine = CmaxEngine(solver)
print(f"ell = {inst.ell}; a type turns blue once speed * OPT+ >= ell\n")

events = [("insert", 1)] * 6 + [("insert", 0)] * 4 + [("remove", 1)] * 5
for n, (op, j) in enumerate(events, 1):
    before = engine.state
    engine.journal.clear()
    state = engine.insert(j) if op == "insert" else engine.remove(j)
    _, plus = solver.opt_grid(state.jobs)
    recoloured = ", ".join(f"type {r.type} {'red->blue' if r.to_blue else 'blue->red'}" for r in engine.journal)
    checks = engine.check_invariants()
    bounds = engine.check_step_bounds(before, state, op, j)
    ok = all(checks.values()) and all(bounds.values())
    print(f"{n:2d} {op:6s} p={inst.sizes[j]}  alpha={str(state.alpha):>5s}  blue={state.blue}  "
          f"jobs={state.jobs}  OPT+={str(plus):>4s}  {'ok' if ok else 'FAIL'}  {recoloured}")

sol = solver.solve_associated(engine.state)
print("\nfinal red configurations per type:")
for t in range(inst.tau):
    print(f"  speed {inst.speeds[t]}: {sol.configs_of_type(t)}")
print(f"jobs left for blue machines: {sol.blue_jobs}, load {inst.load(sol.blue_jobs)} <= alpha {engine.state.alpha}")
