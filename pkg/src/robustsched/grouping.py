"""Small jobs are grouped into frames of size eps*pmax.

The engine only sees frames (one extra job type).  The ledger keeps the frame
count f within F <= f <= F + 3, where F is the small load in frame units, and
resets f to ceil(F) + 1 whenever it has to move.  The potential phi pays for
those resets.  place_small_jobs then fills the space the engine reserved for
frames on each machine with the actual small jobs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import ceil

from .core import as_rational, check_epsilon

SMALL, LARGE = "small", "large"


class NoSuchSmallJob(KeyError):
    pass


def partition(p, epsilon, pmax) -> str:
    """'large' iff p >= eps * pmax."""
    p = as_rational(p)
    return LARGE if p >= check_epsilon(epsilon) * as_rational(pmax) else SMALL


def _monus(a, b):
    return max(a - b, 0)


def potential(f, F, unit) -> Fraction:
    return 3 * unit * (_monus(f, F + 2) + _monus(F + 1, f))


@dataclass(frozen=True)
class FrameLedger:
    unit: Fraction  # eps * pmax
    f: int = 1
    small_load: Fraction = Fraction(0)
    jobs: tuple = field(default=())  # small sizes, insertion order

    @property
    def F(self) -> Fraction:
        return self.small_load / self.unit

    @property
    def phi(self) -> Fraction:
        return potential(self.f, self.F, self.unit)

    @classmethod
    def start(cls, epsilon, pmax) -> "FrameLedger":
        return cls(check_epsilon(epsilon) * as_rational(pmax))


def update_frames(ledger: FrameLedger, op: str, p):
    """Apply one small-job insert/remove; returns (ledger, delta_f)."""
    p = as_rational(p)
    if not 0 < p < ledger.unit:
        raise ValueError(f"{p} is not a small job")
    if op == "insert":
        jobs = ledger.jobs + (p,)
        load = ledger.small_load + p
    elif op == "remove":
        if p not in ledger.jobs:
            raise NoSuchSmallJob(f"no small job of size {p}")
        k = len(ledger.jobs) - 1 - ledger.jobs[::-1].index(p)
        jobs = ledger.jobs[:k] + ledger.jobs[k + 1:]
        load = ledger.small_load - p
    else:
        raise ValueError(f"unknown operation {op!r}")
    F = load / ledger.unit
    f = ledger.f
    if not F <= f <= F + 3:
        f = ceil(F) + 1
    return replace(ledger, f=f, small_load=load, jobs=jobs), f - ledger.f


def frame_invariants(before: FrameLedger, after: FrameLedger, p) -> dict:
    """Verdicts for F <= f <= F+3, the reset rule and the potential inequalities."""
    df = after.f - before.f
    dphi = after.phi - before.phi
    unit = after.unit
    out = {
        "frames_bounded": after.F <= after.f <= after.F + 3,
        "frames_reset": df == 0 or after.f == ceil(after.F) + 1,
        "phi_step": abs(dphi) <= 3 * unit,
        "phi_amortized": unit * abs(df) + dphi <= 3 * as_rational(p),
        "phi_zero_after_reset": df == 0 or after.phi == 0,
    }
    return out


class SmallPlacement:
    """Small job ids per machine, with their sizes."""

    def __init__(self, machines, size_of=None, per_machine=None):
        self.machines = list(machines)
        self.size_of = dict(size_of or {})
        self.per_machine = {i: list((per_machine or {}).get(i, [])) for i in self.machines}

    def copy(self) -> "SmallPlacement":
        return SmallPlacement(self.machines, self.size_of, self.per_machine)

    def load(self, i) -> Fraction:
        return sum((self.size_of[j] for j in self.per_machine[i]), Fraction(0))

    def where(self) -> dict:
        return {j: i for i, js in self.per_machine.items() for j in js}


def place_small_jobs(prev: SmallPlacement, frames: dict, removed, added, unit):
    """Fill frame space with small jobs.

    frames maps machine -> frame count after the step, removed is a list of
    job ids, added a list of (id, size).  Returns (placement, moved load)."""
    cur = prev.copy()
    unit = as_rational(unit)
    gone = set(removed)
    for i in cur.machines:
        cur.per_machine[i] = [j for j in cur.per_machine[i] if j not in gone]
    for j in gone:
        cur.size_of.pop(j, None)
    pending = []
    for j, p in added:
        cur.size_of[j] = as_rational(p)
        pending.append((j, None))
    for i in cur.machines:
        cap = (1 + frames.get(i, 0)) * unit
        # pull the newest jobs until the machine is back under its upper bound
        while cur.per_machine[i] and cur.load(i) > cap:
            pending.append((cur.per_machine[i].pop(), i))
    moved = Fraction(0)
    for j, origin in pending:
        i = max(cur.machines, key=lambda i: (frames.get(i, 0) * unit - cur.load(i), -i))
        cur.per_machine[i].append(j)
        if origin is not None and origin != i:
            moved += cur.size_of[j]
    # A machine that gained frames, or lost a job, may sit below its lower
    # bound.  While f <= F + 3 some other machine holds more than its frames.
    # Top up with the smallest job that closes the gap, else the largest one.
    while True:
        low = [i for i in cur.machines if cur.load(i) < (frames.get(i, 0) - 3) * unit]
        if not low:
            break
        i = min(low, key=lambda i: (cur.load(i) - frames.get(i, 0) * unit, i))
        gap = (frames.get(i, 0) - 3) * unit - cur.load(i)
        offers = [
            (cur.size_of[j], k, j)
            for k in cur.machines if k != i and cur.load(k) > frames.get(k, 0) * unit
            for j in cur.per_machine[k]
        ]
        if not offers:
            break
        closing = [o for o in offers if o[0] >= gap]
        size, k, j = min(closing) if closing else max(offers)
        cur.per_machine[k].remove(j)
        cur.per_machine[i].append(j)
        moved += size
    return cur, moved


def sandwich_ok(placement: SmallPlacement, frames: dict, unit) -> bool:
    """(1 + f_i) unit >= small load_i >= (f_i - 3) unit on every machine."""
    for i in placement.machines:
        f_i = frames.get(i, 0)
        load = placement.load(i)
        if not (1 + f_i) * unit >= load >= (f_i - 3) * unit:
            return False
    return True


def small_moved_bound(prev_frames: dict, frames: dict, unit) -> Fraction:
    """2 * sum_i |delta frames_i| * unit."""
    keys = set(prev_frames) | set(frames)
    return 2 * unit * sum(abs(frames.get(i, 0) - prev_frames.get(i, 0)) for i in keys)
