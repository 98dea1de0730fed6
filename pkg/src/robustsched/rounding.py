"""Rounding of large job sizes and machine speeds onto the (1+eps) grid.

Large jobs (eps*pmax <= p <= pmax) are rounded in two stages: first to a
power of (1+eps) times eps*pmax, then to an integer multiple of eps*pmax.
The result is reported in units of eps*pmax, so every rounded size is an
integer between 1 and 1/eps.  Makespan rounds down and covering rounds up,
which keeps the reported objective on the safe side once the schedule is
mapped back to the original sizes.
"""

from __future__ import annotations

from fractions import Fraction
from math import ceil, floor

from .core import MAKESPAN, DomainError, PowerGrid, as_rational, check_epsilon, objective_name


def _unit(epsilon, pmax):
    return check_epsilon(epsilon) * as_rational(pmax)


def round_job(p, epsilon, pmax, objective=MAKESPAN) -> Fraction:
    """Rounded size of a large job, in units of eps*pmax."""
    eps = check_epsilon(epsilon)
    p, pmax = as_rational(p), as_rational(pmax)
    unit = eps * pmax
    if not unit <= p <= pmax:
        raise DomainError(f"size {p} is not large (needs {unit} <= p <= {pmax})")
    grid = PowerGrid(eps)
    y = p / unit
    top = 1 / eps
    if objective_name(objective) == MAKESPAN:
        return Fraction(max(1, floor(grid.floor(y))))
    return Fraction(min(ceil(grid.next(y)), top))


def rounded_sizes(epsilon, objective=MAKESPAN):
    """Every value round_job can return, ascending (units of eps*pmax)."""
    eps = check_epsilon(epsilon)
    grid = PowerGrid(eps)
    top = 1 / eps
    out = set()
    k = 0
    while grid.power(k) <= top:
        v = grid.power(k)
        if objective_name(objective) == MAKESPAN:
            out.add(Fraction(floor(v)))
        else:
            out.add(Fraction(min(ceil(v), top)))
        k += 1
    if objective_name(objective) != MAKESPAN and grid.power(k - 1) < top:
        out.add(Fraction(top))
    return sorted(out)


def round_speed(s, epsilon, objective=MAKESPAN) -> Fraction:
    """Smallest grid power >= s for makespan, largest grid power <= s for covering."""
    s = as_rational(s)
    if s <= 0:
        raise DomainError("speeds must be positive")
    grid = PowerGrid(epsilon)
    if objective_name(objective) == MAKESPAN:
        return grid.next(s)
    return grid.floor(s)


def unround_schedule(schedule, original_size):
    """Map a concrete schedule {machine: [job id, ...]} to {machine: [(job id, size), ...]}
    with the original sizes; raises KeyError for a job without a recorded size."""
    out = {}
    for i, jobs in schedule.items():
        out[i] = [(j, original_size[j]) for j in jobs]
    return out


def schedule_loads(schedule) -> dict:
    """Per-machine loads of a {machine: [(job id, size), ...]} schedule."""
    return {i: sum((p for _, p in jobs), Fraction(0)) for i, jobs in schedule.items()}


def rounding_factor(epsilon, pmax, objective=MAKESPAN, samples: int = 64) -> Fraction:
    """Worst ratio between original and rounded size over a rational lattice of
    large sizes (max p/r for makespan, max r/p for covering)."""
    eps = check_epsilon(epsilon)
    pmax = as_rational(pmax)
    unit = eps * pmax
    worst = Fraction(1)
    for k in range(samples + 1):
        p = unit + (pmax - unit) * Fraction(k, samples)
        r = round_job(p, eps, pmax, objective) * unit
        ratio = p / r if objective_name(objective) == MAKESPAN else r / p
        worst = max(worst, ratio)
    return worst
