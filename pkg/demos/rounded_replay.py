"""Replay a random trace with small jobs through the full pipeline.

Large jobs are rounded onto a geometric grid, small jobs are bundled into
frames of size eps*pmax, the engine schedules rounded jobs and frames, and
the concrete schedule of original jobs follows it.  The table shows the
objective next to the exact optimum, the frame count f against the small
load F, and how much work moved in each step.
"""

from fractions import Fraction

from robustsched.harness import failing, generate, replay

trace = generate(seed=5, machines=3, steps=30, pmax=8, epsilon=Fraction(1, 2), small_prob=0.5)
print("speeds:", ", ".join(str(s) for s in trace.speeds))
rows, pipe = replay(trace, mode="rounded", oracle=True)

print(f"\n{'step':>4} {'event':>12} {'value':>7} {'OPT*':>6} {'ratio':>6} {'f':>2} {'F':>6} {'moved':>6}")
for r in rows:
    ratio = f"{float(r.ratio):.3f}" if r.ratio is not None else "-"
    print(f"{r.step:4d} {r.op:>6s} {str(r.p):>5s} {float(r.objective):7.3f} {str(r.opt_star):>6s} {ratio:>6s} "
          f"{r.f:2d} {float(r.F):6.3f} {str(r.migration):>6s}")

total = sum((r.migration for r in rows), Fraction(0))
inserted = sum((r.p for r in rows if r.op == "insert"), Fraction(0))
print(f"\ntotal moved {total} against {inserted} of inserted work; failed verdicts: {failing(rows) or 'none'}")
print("final loads:", {i: str(v) for i, v in pipe.machine_loads().items()})
