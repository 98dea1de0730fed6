"""Concrete placement of the blue jobs on the blue machines.

Loads are kept proportional to speed: with A = (blue load) / (blue speed sum),
every blue machine ends with |load_i - s_i * A| < pmax.  A change of the
blue job vector is absorbed by a deficit greedy followed by a rebalance loop,
so only a bounded amount of work moves per changed job.
"""

from __future__ import annotations

from fractions import Fraction


class BlueInfeasible(RuntimeError):
    """Blue jobs but no blue machine to hold them."""


class BlueAssignment:
    """Job-count vectors per blue machine id."""

    def __init__(self, sizes, per_machine=None):
        self.sizes = tuple(Fraction(p) for p in sizes)
        self.per_machine = {i: list(v) for i, v in (per_machine or {}).items()}

    def copy(self) -> "BlueAssignment":
        return BlueAssignment(self.sizes, self.per_machine)

    def load(self, i) -> Fraction:
        v = self.per_machine.get(i)
        if v is None:
            return Fraction(0)
        return sum((p * c for p, c in zip(self.sizes, v)), Fraction(0))

    @property
    def loads(self) -> dict:
        return {i: self.load(i) for i in self.per_machine}

    def total(self) -> tuple:
        out = [0] * len(self.sizes)
        for v in self.per_machine.values():
            for j, c in enumerate(v):
                out[j] += c
        return tuple(out)

    def counts(self, i) -> tuple:
        return tuple(self.per_machine.get(i, [0] * len(self.sizes)))


def average(assign: BlueAssignment, speeds: dict) -> Fraction:
    area = sum(speeds.values(), Fraction(0))
    if area == 0:
        return Fraction(0)
    return sum((assign.load(i) for i in speeds), Fraction(0)) / area


def max_deviation(assign: BlueAssignment, speeds: dict) -> Fraction:
    A = average(assign, speeds)
    return max((abs(assign.load(i) - s * A) for i, s in speeds.items()), default=Fraction(0))


def sync(prev: BlueAssignment, target, speeds: dict, pmax):
    """Move prev towards the blue job vector `target` on machines `speeds`
    ({machine id: speed}).  Returns (assignment, moved load)."""
    sizes = prev.sizes
    pmax = Fraction(pmax)
    d = len(sizes)
    target = tuple(target)
    if any(c and sizes[j] > pmax for j, c in enumerate(target)):
        raise ValueError("a blue job is larger than pmax")
    if not speeds:
        if any(target):
            raise BlueInfeasible("blue jobs but no blue machine")
        return BlueAssignment(sizes), Fraction(0)

    cur = BlueAssignment(sizes, {i: prev.per_machine.get(i, [0] * d) for i in speeds})
    pool = [0] * d  # jobs that left a departed machine and may be re-placed
    for i, v in prev.per_machine.items():
        if i not in speeds:
            for j, c in enumerate(v):
                pool[j] += c

    A = sum((p * c for p, c in zip(sizes, target)), Fraction(0)) / sum(speeds.values(), Fraction(0))
    have = cur.total()
    moved = Fraction(0)
    adds = []
    for j in range(d):
        diff = target[j] - have[j]
        while diff < 0:
            # take the job off the machine that sits furthest above its share
            cands = [i for i in sorted(speeds) if cur.per_machine[i][j] > 0]
            i = max(cands, key=lambda i: (cur.load(i) - speeds[i] * A, -i))
            cur.per_machine[i][j] -= 1
            diff += 1
        if diff > 0:
            reused = min(diff, pool[j])
            adds += [(j, True)] * reused + [(j, False)] * (diff - reused)

    adds.sort(key=lambda a: (-sizes[a[0]], a[0], not a[1]))
    for j, was_placed in adds:
        i = max(sorted(speeds), key=lambda i: (speeds[i] * A - cur.load(i), -i))
        cur.per_machine[i][j] += 1
        if was_placed:
            moved += sizes[j]

    while True:
        devs = {i: cur.load(i) - speeds[i] * A for i in speeds}
        # moving a job of size q <= pmax between the extremes lowers the sum
        # of squared deviations while their gap exceeds pmax, so this ends
        if max(abs(v) for v in devs.values()) < pmax:
            break
        src = max(sorted(devs), key=lambda i: (devs[i], -i))
        dst = min(sorted(devs), key=lambda i: (devs[i], i))
        deficit = -devs[dst]
        held = [j for j in range(d) if cur.per_machine[src][j] > 0]
        fitting = [j for j in held if sizes[j] - deficit <= pmax]
        j = max(fitting, key=lambda j: (sizes[j], -j)) if fitting else min(held, key=lambda j: (sizes[j], j))
        cur.per_machine[src][j] -= 1
        cur.per_machine[dst][j] += 1
        moved += sizes[j]
    return cur, moved


def moved_bound(prev: BlueAssignment, target, speeds: dict, pmax) -> Fraction:
    """sum_j |d nu_j| (p_j + pmax) plus the previous load of departed machines."""
    sizes = prev.sizes
    before = prev.total()
    departed = sum((prev.load(i) for i in prev.per_machine if i not in speeds), Fraction(0))
    change = sum((abs(t - b) * (p + Fraction(pmax)) for t, b, p in zip(target, before, sizes)), Fraction(0))
    return change + departed
