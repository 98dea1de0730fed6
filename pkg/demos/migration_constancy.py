"""Migration per event does not grow with the length of the run.

For eps = 1/2 and pmax = 4 we replay the same total number of events as
many short traces, fewer medium ones, or a handful of long ones, and record
the largest ratio of moved work to the size of the job that triggered it.
A robust algorithm keeps this maximum fixed however long it runs.
"""

from fractions import Fraction

from robustsched.harness import generate, replay

for objective in ("cmax", "cmin"):
    print(objective)
    for length, count in ((50, 80), (200, 20), (800, 5)):
        worst = Fraction(0)
        for s in range(count):
            trace = generate(1000 + s, 2 + s % 3, length, 4, Fraction(1, 2), 0.0, objective)
            rows, _ = replay(trace, mode="no-rounding")
            worst = max([worst] + [r.migration / r.p for r in rows])
        print(f"  {count:3d} traces of {length:3d} events: max moved/p = {worst}")
