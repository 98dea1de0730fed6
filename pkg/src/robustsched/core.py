"""Exact rational instance model, the (1+eps)-power grid and the threshold ell."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from math import gcd, lcm

MAKESPAN = "cmax"
COVERING = "cmin"

_OBJECTIVE_ALIASES = {
    "cmax": MAKESPAN,
    "makespan": MAKESPAN,
    "cmin": COVERING,
    "covering": COVERING,
}


class ConfigurationError(ValueError):
    """Invalid parameters (epsilon, sizes, speeds)."""


class DomainError(ValueError):
    """Argument outside the domain of a grid operation."""


def objective_name(objective: str) -> str:
    try:
        return _OBJECTIVE_ALIASES[objective]
    except KeyError:
        raise ConfigurationError(f"unknown objective {objective!r}") from None


def as_rational(x) -> Fraction:
    """Convert ints, Fractions and strings like '3/2' to a Fraction.

    Floats are rejected: the engine never touches floating point.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError):
            raise ConfigurationError(f"not a rational number: {x!r}") from None
    raise ConfigurationError(f"expected an exact rational, got {type(x).__name__}")


def check_epsilon(epsilon) -> Fraction:
    eps = as_rational(epsilon)
    if eps <= 0 or eps > 1 or eps.numerator != 1:
        raise ConfigurationError(f"1/epsilon must be a positive integer, got epsilon={eps}")
    return eps


def rational_gcd(values) -> Fraction:
    """Largest g such that every value is an integer multiple of g."""
    values = [as_rational(v) for v in values]
    if not values:
        return Fraction(1)
    den = reduce(lcm, (v.denominator for v in values), 1)
    num = reduce(gcd, (v.numerator * (den // v.denominator) for v in values), 0)
    return Fraction(num, den)


class PowerGrid:
    """Integer powers of base = 1 + eps, located by doubling and bisection."""

    def __init__(self, epsilon):
        self.epsilon = check_epsilon(epsilon)
        self.base = 1 + self.epsilon
        self._cache = {0: Fraction(1)}

    def power(self, k: int) -> Fraction:
        v = self._cache.get(k)
        if v is None:
            v = self.base ** k
            self._cache[k] = v
        return v

    def exponent_ceil(self, x) -> int:
        """Smallest integer k with base**k >= x."""
        x = as_rational(x)
        if x <= 0:
            raise DomainError(f"grid exponent needs x > 0, got {x}")
        if x == 1:
            return 0
        if x > 1:
            lo, hi = 0, 1
            while self.power(hi) < x:
                lo, hi = hi, hi * 2
        else:
            lo, hi = -1, 0
            while self.power(lo) >= x:
                hi, lo = lo, lo * 2
        # invariant: power(lo) < x <= power(hi)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.power(mid) >= x:
                hi = mid
            else:
                lo = mid
        return hi

    def next(self, x) -> Fraction:
        return self.power(self.exponent_ceil(x))

    def prev_strict(self, x) -> Fraction:
        return self.power(self.exponent_ceil(x) - 1)

    def floor(self, x) -> Fraction:
        """Largest power <= x."""
        k = self.exponent_ceil(x)
        v = self.power(k)
        return v if v == x else self.power(k - 1)

    def is_power(self, x) -> bool:
        x = as_rational(x)
        return x > 0 and self.next(x) == x

    def exponent(self, x) -> int:
        """Exponent of an on-grid value."""
        k = self.exponent_ceil(x)
        if self.power(k) != x:
            raise DomainError(f"{x} is not a power of {self.base}")
        return k


def threshold_ell(objective, epsilon, pmax) -> Fraction:
    """The red/blue threshold: base * next(c * pmax / eps), c = 2 (makespan) or 3 (covering)."""
    obj = objective_name(objective)
    grid = PowerGrid(epsilon)
    pmax = as_rational(pmax)
    if pmax <= 0:
        raise ConfigurationError("pmax must be positive")
    c = 2 if obj == MAKESPAN else 3
    return grid.base * grid.next(c * pmax / grid.epsilon)


def grid_next(x, epsilon) -> Fraction:
    return PowerGrid(epsilon).next(x)


def grid_prev_strict(x, epsilon) -> Fraction:
    return PowerGrid(epsilon).prev_strict(x)


@dataclass(frozen=True)
class Instance:
    """Static part of a high-multiplicity instance.

    Job counts are not stored here; they live in the engine state.
    sizes are ascending and positive, speeds are strictly descending powers
    of 1+eps.  Equal sizes are allowed (the frame type shares its size with
    the smallest rounded type in the rounded pipeline).
    """

    epsilon: Fraction
    pmax: Fraction
    sizes: tuple
    speeds: tuple
    counts: tuple
    objective: str = MAKESPAN
    grid: PowerGrid = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        eps = check_epsilon(self.epsilon)
        object.__setattr__(self, "epsilon", eps)
        object.__setattr__(self, "objective", objective_name(self.objective))
        object.__setattr__(self, "pmax", as_rational(self.pmax))
        sizes = tuple(as_rational(p) for p in self.sizes)
        speeds = tuple(as_rational(s) for s in self.speeds)
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "speeds", speeds)
        object.__setattr__(self, "counts", counts)
        grid = PowerGrid(eps)
        object.__setattr__(self, "grid", grid)
        if not sizes:
            raise ConfigurationError("at least one job type is required")
        if any(p <= 0 or p > self.pmax for p in sizes):
            raise ConfigurationError("job sizes must lie in (0, pmax]")
        if any(a > b for a, b in zip(sizes, sizes[1:])):
            raise ConfigurationError("job sizes must be ascending")
        if len(speeds) != len(counts) or not speeds:
            raise ConfigurationError("speeds and machine counts must have equal, nonzero length")
        if any(a <= b for a, b in zip(speeds, speeds[1:])):
            raise ConfigurationError("speeds must be strictly descending")
        if any(not grid.is_power(s) for s in speeds):
            raise ConfigurationError("speeds must be powers of 1+epsilon")
        if any(c <= 0 for c in counts):
            raise ConfigurationError("machine counts must be positive")

    @property
    def d(self) -> int:
        return len(self.sizes)

    @property
    def tau(self) -> int:
        return len(self.speeds)

    @property
    def m(self) -> int:
        return sum(self.counts)

    @property
    def pmin(self) -> Fraction:
        return self.sizes[0]

    @property
    def smax(self) -> Fraction:
        return self.speeds[0]

    @cached_property
    def ell(self) -> Fraction:
        return threshold_ell(self.objective, self.epsilon, self.pmax)

    @cached_property
    def granularity(self) -> Fraction:
        return rational_gcd(self.sizes)

    def load(self, vec) -> Fraction:
        return sum((p * c for p, c in zip(self.sizes, vec)), Fraction(0))

    def speed_area(self, machine_vec) -> Fraction:
        """s^T mu for a machine-count vector."""
        return sum((s * c for s, c in zip(self.speeds, machine_vec)), Fraction(0))


def group_speeds(speeds):
    """Collapse per-machine speeds into (descending distinct speeds, counts, machine -> type)."""
    distinct = sorted(set(speeds), reverse=True)
    index = {s: t for t, s in enumerate(distinct)}
    counts = [0] * len(distinct)
    for s in speeds:
        counts[index[s]] += 1
    return tuple(distinct), tuple(counts), tuple(index[s] for s in speeds)
