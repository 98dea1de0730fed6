"""Per-job schedule that follows the high-multiplicity schedule.

The high-multiplicity schedule only says how many jobs of each type sit on
each machine.  The legacy schedule names the concrete jobs, moves as few of
them as the count changes force, and measures migration in original sizes.
"""

from __future__ import annotations

from fractions import Fraction


class LegacyError(RuntimeError):
    pass


class LegacySchedule:
    def __init__(self):
        self.machine_of = {}  # job id -> machine
        self.type_of = {}  # job id -> high-multiplicity type
        self.size_of = {}  # job id -> original size

    def copy(self) -> "LegacySchedule":
        out = LegacySchedule()
        out.machine_of = dict(self.machine_of)
        out.type_of = dict(self.type_of)
        out.size_of = dict(self.size_of)
        return out

    def __len__(self):
        return len(self.machine_of)

    def counts(self) -> dict:
        """(machine, type) -> number of jobs."""
        out = {}
        for j, i in self.machine_of.items():
            key = (i, self.type_of[j])
            out[key] = out.get(key, 0) + 1
        return out

    def jobs_on(self, i) -> list:
        return sorted(j for j, k in self.machine_of.items() if k == i)

    def load(self, i) -> Fraction:
        return sum((self.size_of[j] for j, k in self.machine_of.items() if k == i), Fraction(0))


def hm_counts(hm: dict, types=None) -> dict:
    """{machine: count vector} -> {(machine, type): count} for nonzero entries,
    restricted to the given types."""
    out = {}
    for i, vec in hm.items():
        for t, c in enumerate(vec):
            if c and (types is None or t in types):
                out[(i, t)] = c
    return out


def follows(legacy: LegacySchedule, hm: dict, types=None) -> bool:
    return legacy.counts() == hm_counts(hm, types)


def legacy_convert(prev: LegacySchedule, prev_hm: dict, new_hm: dict, removed, inserted, types=None):
    """Build a legacy schedule following new_hm.

    removed: job ids leaving; inserted: (id, type, size) triples arriving.
    Returns (schedule, xi, moved) where xi is the migrated original size and
    moved counts migrated jobs per type."""
    cur = prev.copy()
    for j in removed:
        if j not in cur.machine_of:
            raise LegacyError(f"job {j} is not scheduled")
        del cur.machine_of[j], cur.type_of[j], cur.size_of[j]
    have = cur.counts()
    want = hm_counts(new_hm, types)
    pool = []  # (job id, origin machine or None)
    for (i, t), c in sorted(have.items()):
        surplus = c - want.get((i, t), 0)
        if surplus > 0:
            mine = sorted((j for j, k in cur.machine_of.items() if k == i and cur.type_of[j] == t), reverse=True)
            for j in mine[:surplus]:
                pool.append((j, i))
                del cur.machine_of[j]
    for j, t, p in inserted:
        cur.type_of[j] = t
        cur.size_of[j] = Fraction(p)
        pool.append((j, None))
    pool.sort(key=lambda e: e[0])
    by_type = {}
    for j, origin in pool:
        by_type.setdefault(cur.type_of[j], []).append((j, origin))
    xi = Fraction(0)
    moved = {}
    now = cur.counts()
    for (i, t), c in sorted(want.items()):
        deficit = c - now.get((i, t), 0)
        for _ in range(deficit):
            if not by_type.get(t):
                raise LegacyError(f"no job of type {t} left for machine {i}")
            j, origin = by_type[t].pop(0)
            cur.machine_of[j] = i
            if origin is not None:
                xi += cur.size_of[j]
                moved[t] = moved.get(t, 0) + 1
    leftover = [j for lst in by_type.values() for j, _ in lst]
    if leftover:
        raise LegacyError(f"jobs {leftover} have no machine in the new schedule")
    return cur, xi, moved


def hm_migrations(prev_hm: dict, new_hm: dict, removed_types, inserted_types, types=None) -> dict:
    """Per type, how many jobs the high-multiplicity schedule itself migrated:
    min(total increase - insertions, total decrease - removals)."""
    a, b = hm_counts(prev_hm, types), hm_counts(new_hm, types)
    inc, dec = {}, {}
    for key in set(a) | set(b):
        delta = b.get(key, 0) - a.get(key, 0)
        t = key[1]
        if delta > 0:
            inc[t] = inc.get(t, 0) + delta
        elif delta < 0:
            dec[t] = dec.get(t, 0) - delta
    out = {}
    for t in set(inc) | set(dec):
        ins = sum(1 for x in inserted_types if x == t)
        rem = sum(1 for x in removed_types if x == t)
        out[t] = max(0, min(inc.get(t, 0) - ins, dec.get(t, 0) - rem))
    return out


def movement_bound(prev_hm: dict, new_hm: dict, prev: LegacySchedule, new: LegacySchedule, types=None) -> Fraction:
    """sum over (machine, type) of |change of count| times the largest original
    size of that type among the jobs of either schedule."""
    a, b = hm_counts(prev_hm, types), hm_counts(new_hm, types)
    biggest = {}
    for sched in (prev, new):
        for j, t in sched.type_of.items():
            biggest[t] = max(biggest.get(t, Fraction(0)), sched.size_of[j])
    return sum(
        (abs(b.get(k, 0) - a.get(k, 0)) * biggest.get(k[1], Fraction(0)) for k in set(a) | set(b)),
        Fraction(0),
    )


def step_migration(prev: LegacySchedule, new: LegacySchedule) -> Fraction:
    """Original size of the jobs present in both schedules whose machine differs."""
    return sum(
        (new.size_of[j] for j, i in new.machine_of.items() if j in prev.machine_of and prev.machine_of[j] != i),
        Fraction(0),
    )
