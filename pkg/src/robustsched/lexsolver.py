"""Exact solver for the dynamic configuration ILP.

Everything the engines ask about a state goes through a Solver bound to one
Instance: validity at a value T, the optimal grid bounds, the critical type,
the largest kappa a state is kappa-free for, and the lexicographically
minimal associated solution.

Internally job vectors below a root vector nu are enumerated once (a
mixed-radix lattice), loads are integers in units of the size granularity,
and the red side is decided by a memoized branch-and-bound over red
machines.  Only T, speeds and alpha stay Fractions.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import ceil, floor
from typing import NamedTuple, Optional

from .core import MAKESPAN, Instance, as_rational


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class State:
    """ILP parameters (alpha, blue machine counts, job counts)."""

    alpha: Fraction
    blue: tuple
    jobs: tuple

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_rational(self.alpha))
        object.__setattr__(self, "blue", tuple(int(b) for b in self.blue))
        object.__setattr__(self, "jobs", tuple(int(n) for n in self.jobs))

    def replace(self, alpha=None, blue=None, jobs=None) -> "State":
        return State(
            self.alpha if alpha is None else alpha,
            self.blue if blue is None else blue,
            self.jobs if jobs is None else jobs,
        )

    @staticmethod
    def empty(instance: Instance) -> "State":
        return State(Fraction(0), (0,) * instance.tau, (0,) * instance.d)


class AssociatedSolution(NamedTuple):
    x: dict  # (type, counts) -> multiplicity
    blue_jobs: tuple
    objective: Optional[Fraction]  # None stands for +infinity (covering, no red machine)

    def configs_of_type(self, t):
        out = []
        for (tt, counts), n in sorted(self.x.items()):
            if tt == t:
                out.extend([counts] * n)
        return out


class OptBounds(NamedTuple):
    opt: Fraction
    opt_minus: Fraction
    opt_plus: Fraction


def add_vec(a, b, k=1):
    return tuple(x + k * y for x, y in zip(a, b))


def unit_vec(n, j, k=1):
    v = [0] * n
    v[j] = k
    return tuple(v)


class Lattice:
    """All sub-vectors of a root job vector, with a linear mixed-radix index.

    For c <= r componentwise, index(r - c) == index(r) - index(c).
    """

    def __init__(self, root, int_sizes):
        self.root = tuple(root)
        self.weights = []
        w = 1
        for n in self.root:
            self.weights.append(w)
            w *= n + 1
        self.size = w
        vecs = [None] * w
        loads = [0] * w
        ranges = [range(n + 1) for n in reversed(self.root)]
        for rev in product(*ranges):
            vec = rev[::-1]
            i = sum(a * b for a, b in zip(vec, self.weights))
            vecs[i] = vec
            loads[i] = sum(a * b for a, b in zip(vec, int_sizes))
        self.vecs = vecs
        self.loads = loads
        self.top = w - 1
        self._desc = {}
        self._asc = {}

    def index(self, vec) -> int:
        return sum(a * b for a, b in zip(vec, self.weights))

    def subs_desc(self, r):
        """Indices c <= r sorted by load descending (ties: larger vector first)."""
        out = self._desc.get(r)
        if out is None:
            vec = self.vecs[r]
            idx = [
                sum(a * b for a, b in zip(c, self.weights))
                for c in product(*[range(n + 1) for n in vec])
            ]
            loads = self.loads
            idx.sort(key=lambda i: (loads[i], i), reverse=True)
            out = idx
            self._desc[r] = out
        return out

    def subs_asc(self, r):
        out = self._asc.get(r)
        if out is None:
            out = self.subs_desc(r)[::-1]
            self._asc[r] = out
        return out


_LATTICE_CACHE_SIZE = 64
_MEMO_LIMIT = 400_000


class Solver:
    """Exact oracle for one instance (sizes, speed types, machine counts)."""

    def __init__(self, instance: Instance):
        self.inst = instance
        self.objective = instance.objective
        self.makespan = instance.objective == MAKESPAN
        self.grid = instance.grid
        self.base = instance.grid.base
        self.eps = instance.epsilon
        self.ell = instance.ell
        self.unit = instance.granularity
        self.isizes = tuple(int(p / self.unit) for p in instance.sizes)
        self.speeds = instance.speeds
        self.counts = instance.counts
        self.tau = instance.tau
        self.d = instance.d
        # red configurations are bounded by ell (makespan) or ell + pmax (covering)
        bound = self.ell if self.makespan else self.ell + instance.pmax
        self.config_bound = bound
        self.config_cap = floor(bound / self.unit)
        self._lattices: OrderedDict = OrderedDict()
        self._red_memo: dict = {}
        self._opt_cache: dict = {}
        self._exists_cache: dict = {}
        self.stats = {"dp_calls": 0, "memo_hits": 0}

    # ------------------------------------------------------------ helpers
    def lattice(self, root) -> Lattice:
        root = tuple(root)
        lat = self._lattices.get(root)
        if lat is None:
            lat = Lattice(root, self.isizes)
            self._lattices[root] = lat
            if len(self._lattices) > _LATTICE_CACHE_SIZE:
                old, _ = self._lattices.popitem(last=False)
                self._red_memo = {k: v for k, v in self._red_memo.items() if k[0] != old}
        else:
            self._lattices.move_to_end(root)
        return lat

    def int_load(self, vec) -> int:
        return sum(a * b for a, b in zip(vec, self.isizes))

    def load(self, vec) -> Fraction:
        return self.int_load(vec) * self.unit

    def blue_area(self, blue) -> Fraction:
        return sum((s * b for s, b in zip(self.speeds, blue)), Fraction(0))

    def red_counts(self, blue):
        return tuple(m - b for m, b in zip(self.counts, blue))

    def critical_type(self, T) -> Optional[int]:
        T = as_rational(T)
        if T <= 0:
            return None
        for t, s in enumerate(self.speeds):
            if s * T == self.ell:
                return t
        return None

    def colouring_ok(self, blue, T) -> bool:
        """Blue machines need s_t T >= ell, red ones s_t T <= ell."""
        for t, s in enumerate(self.speeds):
            cap = s * T
            if blue[t] > 0 and cap < self.ell:
                return False
            if blue[t] < self.counts[t] and cap > self.ell:
                return False
        return True

    def red_bounds(self, t, T):
        """Integer load window [lo, hi] of a red machine of type t at value T."""
        cap = self.speeds[t] * T
        if self.makespan:
            return 0, min(self.config_cap, floor(cap / self.unit))
        return ceil(cap / self.unit), self.config_cap

    def blue_budget(self, alpha) -> int:
        """alpha in size units: floored for makespan, ceiled for covering."""
        a = alpha / self.unit
        return floor(a) if self.makespan else ceil(a)

    # ------------------------------------------------------------ red DP
    def _specs(self, red, T):
        specs = []
        for t in range(self.tau):
            if red[t]:
                lo, hi = self.red_bounds(t, T)
                specs.extend([(lo, hi, None)] * red[t])
        return tuple(specs)

    def best_red(self, lat: Lattice, specs: tuple, r: int):
        """Makespan: max total red load (-1 if infeasible).
        Covering: min total red load (None if infeasible).

        specs lists (lo, hi, tie) per red machine; tie = (load, counts)
        restricts configurations of exactly that load to vectors >= counts.
        """
        key = (lat.root, specs, r)
        hit = self._red_memo.get(key)
        if hit is not None:
            self.stats["memo_hits"] += 1
            return hit[0]
        self.stats["dp_calls"] += 1
        n = len(specs)
        suffix_hi = [0] * (n + 1)
        suffix_lo = [0] * (n + 1)
        for i in range(n - 1, -1, -1):
            suffix_hi[i] = suffix_hi[i + 1] + specs[i][1]
            suffix_lo[i] = suffix_lo[i + 1] + specs[i][0]
        memo = {}
        loads = lat.loads
        vecs = lat.vecs

        if self.makespan:
            def rec(i, rr):
                if i == n:
                    return 0
                k = (i, rr)
                v = memo.get(k)
                if v is not None:
                    return v
                lo, hi, tie = specs[i]
                total = loads[rr]
                ub = min(total, suffix_hi[i])
                rest_hi = suffix_hi[i + 1]
                best = -1
                for c in lat.subs_desc(rr):
                    L = loads[c]
                    if L > hi:
                        continue
                    if L < lo:
                        break
                    if min(total, L + rest_hi) <= best:
                        break
                    if tie is not None and L == tie[0] and vecs[c] < tie[1]:
                        continue
                    sub = rec(i + 1, rr - c)
                    if sub < 0:
                        continue
                    if L + sub > best:
                        best = L + sub
                        if best >= ub:
                            break
                memo[k] = best
                return best
        else:
            def rec(i, rr):
                if i == n:
                    return 0
                k = (i, rr)
                if k in memo:
                    return memo[k]
                lo, hi, tie = specs[i]
                rest_lo = suffix_lo[i + 1]
                if loads[rr] < suffix_lo[i]:
                    memo[k] = None
                    return None
                best = None
                for c in lat.subs_asc(rr):
                    L = loads[c]
                    if L < lo:
                        continue
                    if L > hi:
                        break
                    if best is not None and L + rest_lo >= best:
                        break
                    if tie is not None and L == tie[0] and vecs[c] < tie[1]:
                        continue
                    sub = rec(i + 1, rr - c)
                    if sub is None:
                        continue
                    if best is None or L + sub < best:
                        best = L + sub
                memo[k] = best
                return best

        value = rec(0, r)
        if len(self._red_memo) > _MEMO_LIMIT:
            self._red_memo.clear()
        self._red_memo[key] = (value,)
        return value

    def _side_feasible(self, lat, specs, r, budget) -> bool:
        """Can the jobs of r be split into red configs (specs) and a blue part
        respecting the blue budget?"""
        total = lat.loads[r]
        if self.makespan:
            need = total - budget
            if need <= 0:
                return True
            return self.best_red(lat, specs, r) >= need
        red = self.best_red(lat, specs, r)
        return red is not None and total - red >= budget

    # ------------------------------------------------------------ validity
    def is_T_valid(self, state: State, T) -> bool:
        T = as_rational(T)
        if not self.colouring_ok(state.blue, T):
            return False
        area = self.base * T * self.blue_area(state.blue)
        a = state.alpha
        if self.makespan:
            if a < 0 or a > area:
                return False
        elif a < area:
            return False
        lat = self.lattice(state.jobs)
        specs = self._specs(self.red_counts(state.blue), T)
        return self._side_feasible(lat, specs, lat.top, self.blue_budget(a))

    def governing_value(self, jobs) -> Fraction:
        """OPT+ for makespan, OPT- for covering."""
        lo, hi = self.opt_grid(jobs)
        return hi if self.makespan else lo

    def is_valid(self, state: State) -> bool:
        return self.is_T_valid(state, self.governing_value(state.jobs))

    def exists_valid(self, jobs, T) -> bool:
        """Validity of the canonical state at T (maximal blue colouring for
        makespan, blue only above ell for covering, alpha at its extreme)."""
        jobs = tuple(jobs)
        T = as_rational(T)
        key = (jobs, T)
        hit = self._exists_cache.get(key)
        if hit is not None:
            return hit
        if self.makespan:
            blue = tuple(m if s * T >= self.ell else 0 for s, m in zip(self.speeds, self.counts))
        else:
            blue = tuple(m if s * T > self.ell else 0 for s, m in zip(self.speeds, self.counts))
        alpha = self.base * T * self.blue_area(blue)
        res = self.is_T_valid(State(alpha, blue, jobs), T)
        if len(self._exists_cache) > _MEMO_LIMIT:
            self._exists_cache.clear()
        self._exists_cache[key] = res
        return res

    # ------------------------------------------------------------ OPT
    def opt_grid(self, jobs):
        """(OPT-, OPT+) without locating OPT beyond what the grid needs."""
        jobs = tuple(jobs)
        hit = self._opt_cache.get(jobs)
        if hit is not None:
            return hit[1], hit[2]
        b = self.opt_bounds(jobs)
        return b.opt_minus, b.opt_plus

    def opt_bounds(self, jobs) -> OptBounds:
        jobs = tuple(jobs)
        hit = self._opt_cache.get(jobs)
        if hit is not None:
            return hit
        if not any(jobs):
            res = OptBounds(Fraction(0), Fraction(0), Fraction(0))
        elif self.makespan:
            res = self._opt_makespan(jobs)
        else:
            res = self._opt_covering(jobs)
        self._opt_cache[jobs] = res
        return res

    def _bisect_exponent(self, jobs, lo, hi, want_first_true):
        """Monotone search over exponents in [lo, hi].

        makespan: validity is false at lo, true at hi; return the smallest
        true exponent.  covering: true at lo, false at hi; return the
        largest true exponent."""
        P = self.grid.power
        while hi - lo > 1:
            mid = (lo + hi) // 2
            ok = self.exists_valid(jobs, P(mid))
            if want_first_true:
                if ok:
                    hi = mid
                else:
                    lo = mid
            else:
                if ok:
                    lo = mid
                else:
                    hi = mid
        return hi if want_first_true else lo

    def _opt_makespan(self, jobs) -> OptBounds:
        total = self.load(jobs)
        area = self.inst.speed_area(self.counts)
        k_hi = self.grid.exponent_ceil(total / self.inst.smax)
        k_lo = self.grid.exponent_ceil(total / (self.base * area)) - 1
        P = self.grid.power
        while not self.exists_valid(jobs, P(k_hi)):
            k_hi += 1  # defensive; the weak estimate makes this unreachable
        while self.exists_valid(jobs, P(k_lo)):
            k_lo -= 1
        k = self._bisect_exponent(jobs, k_lo, k_hi, True)
        plus = P(k)
        minus = P(k - 1)
        cands = [c for c in self.breakpoints(jobs, minus, plus) if minus < c <= plus]
        cands.sort()
        # smallest valid candidate; validity is monotone over the sorted list
        lo, hi = -1, len(cands) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.exists_valid(jobs, cands[mid]):
                hi = mid
            else:
                lo = mid
        opt = cands[hi] if cands else plus
        return OptBounds(opt, minus, plus)

    def _opt_covering(self, jobs) -> OptBounds:
        P = self.grid.power
        t0 = self.unit / self.inst.smax
        if not self.exists_valid(jobs, t0):
            return OptBounds(Fraction(0), Fraction(0), Fraction(0))
        total = self.load(jobs)
        area = self.inst.speed_area(self.counts)
        k_lo = self.grid.exponent_ceil(t0)
        if P(k_lo) != t0:
            k_lo -= 1
        k_hi = self.grid.exponent_ceil(total / area) + 1
        while self.exists_valid(jobs, P(k_hi)):
            k_hi += 1  # defensive
        k = self._bisect_exponent(jobs, k_lo, k_hi, False)
        g = P(k)
        cands = sorted(c for c in self.breakpoints(jobs, g, g * self.base) if g <= c < g * self.base)
        above = [c for c in cands if c > g]
        if above and self.exists_valid(jobs, above[0]):
            # largest valid candidate in (g, base*g)
            lo, hi = 0, len(above)
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if self.exists_valid(jobs, above[mid]):
                    lo = mid
                else:
                    hi = mid
            opt = above[lo]
            minus = g
        else:
            opt = g
            minus = P(k - 1)
        return OptBounds(opt, minus, minus * self.base)

    def breakpoints(self, jobs, a, b):
        """Values in [a, b] where the canonical validity predicate can change."""
        a, b = as_rational(a), as_rational(b)
        out = set()
        unit = self.unit
        for s in self.speeds:
            out.add(self.ell / s)
            L = max(1, ceil(a * s / unit))
            while L * unit <= b * s and L <= self.config_cap:
                out.add(L * unit / s)
                L += 1
        areas = set()
        acc = Fraction(0)
        for s, m in zip(self.speeds, self.counts):
            acc += s * m
            areas.add(acc)
        top = self.int_load(jobs)
        for S in areas:
            denom = self.base * S
            P_ = max(0, ceil(a * denom / unit))
            while P_ * unit <= b * denom and P_ <= top:
                out.add(P_ * unit / denom)
                P_ += 1
        return sorted(x for x in out if a <= x <= b and x > 0)

    # ------------------------------------------------------------ freeness
    def max_freeness(self, state: State) -> Fraction:
        T = self.governing_value(state.jobs)
        if not self.is_T_valid(state, T):
            raise PreconditionError("max_freeness needs a valid state")
        lat = self.lattice(state.jobs)
        specs = self._specs(self.red_counts(state.blue), T)
        total = lat.loads[lat.top]
        if self.makespan:
            red = self.best_red(lat, specs, lat.top)
            min_blue = max(total - red, 0)
            return state.alpha - min_blue * self.unit
        red = self.best_red(lat, specs, lat.top)
        return (total - red) * self.unit - state.alpha

    def is_free(self, state: State, kappa) -> bool:
        """Is the alpha-shifted state valid (down for makespan, up for covering)?"""
        shift = -kappa if self.makespan else kappa
        return self.is_valid(state.replace(alpha=state.alpha + shift))

    # ------------------------------------------------------------ lex-min
    def _key(self, t, c_vec, L):
        comp = Fraction(L) * self.unit / self.speeds[t]
        if self.makespan:
            return (-comp, t, c_vec)
        return (comp, t, c_vec)

    def _threshold_window(self, t, lo, hi, K):
        """Restrict type-t loads to configs whose key is >= K."""
        if K is None:
            return (lo, hi, None)
        comp_k, t_k, c_k = K
        if self.makespan:
            X = -comp_k * self.speeds[t] / self.unit
            # allowed: L < X, or L == X with the tie rule
            if X.denominator == 1:
                Xi = X.numerator
                if t > t_k:
                    return (lo, min(hi, Xi), None)
                if t == t_k:
                    return (lo, min(hi, Xi), (Xi, c_k))
                return (lo, min(hi, Xi - 1), None)
            return (lo, min(hi, floor(X)), None)
        X = comp_k * self.speeds[t] / self.unit
        if X.denominator == 1:
            Xi = X.numerator
            if t > t_k:
                return (max(lo, Xi), hi, None)
            if t == t_k:
                return (max(lo, Xi), hi, (Xi, c_k))
            return (max(lo, Xi + 1), hi, None)
        return (max(lo, floor(X) + 1), hi, None)

    def _feasible_with(self, lat, red, base_bounds, K, r, budget):
        specs = []
        for t in range(self.tau):
            if red[t]:
                lo, hi, tie = self._threshold_window(t, *base_bounds[t], K)
                if lo > hi:
                    return False
                specs.extend([(lo, hi, tie)] * red[t])
        return self._side_feasible(lat, tuple(specs), r, budget)

    def solve_associated(self, state: State, T=None) -> Optional[AssociatedSolution]:
        """Lexicographically minimal feasible solution, or None if infeasible.

        T, when given, must be a value at which the state is T-valid; it only
        narrows the search (the lex-min solution already meets it)."""
        lat = self.lattice(state.jobs)
        red = list(self.red_counts(state.blue))
        if any(x < 0 for x in red):
            raise PreconditionError("more blue machines than machines")
        budget = self.blue_budget(state.alpha)
        base_bounds = []
        for t in range(self.tau):
            if T is None:
                base_bounds.append((0, self.config_cap))
            else:
                base_bounds.append(self.red_bounds(t, as_rational(T)))
        if T is not None and not self._feasible_with(lat, red, base_bounds, None, lat.top, budget):
            base_bounds = [(0, self.config_cap)] * self.tau
        if not self.makespan and T is None:
            base_bounds = [(0, self.config_cap)] * self.tau
        if not self._feasible_with(lat, red, base_bounds, None, lat.top, budget):
            return None
        x = {}
        r = lat.top
        K = None
        chosen = []
        while sum(red) > 0:
            cands = []
            for t in range(self.tau):
                if not red[t]:
                    continue
                lo, hi = base_bounds[t]
                for c in lat.subs_desc(r):
                    L = lat.loads[c]
                    if lo <= L <= hi:
                        key = self._key(t, lat.vecs[c], L)
                        if K is None or key >= K:
                            cands.append((key, t, c))
            cands.sort()
            keys = [cnd[0] for cnd in cands]
            # largest index whose threshold still admits a feasible completion
            lo_i, hi_i = 0, len(cands)
            if not self._feasible_with(lat, red, base_bounds, keys[0], r, budget):
                raise AssertionError("lex search lost feasibility")
            while hi_i - lo_i > 1:
                mid = (lo_i + hi_i) // 2
                if self._feasible_with(lat, red, base_bounds, keys[mid], r, budget):
                    lo_i = mid
                else:
                    hi_i = mid
            key, t, c = cands[lo_i]
            K = key
            red[t] -= 1
            r -= c
            vec = lat.vecs[c]
            x[(t, vec)] = x.get((t, vec), 0) + 1
            chosen.append(key)
        blue_jobs = lat.vecs[r]
        if self.makespan:
            obj = max((-k[0] for k in chosen), default=Fraction(0))
        else:
            obj = min((k[0] for k in chosen), default=None)
        return AssociatedSolution(x, blue_jobs, obj)

    # ------------------------------------------------------------ misc
    def clear(self):
        self._lattices.clear()
        self._red_memo.clear()
        self._opt_cache.clear()
        self._exists_cache.clear()


# Functional wrappers with the operation names used throughout the docs.

def solve_associated(state: State, instance: Instance, solver: Solver | None = None):
    return (solver or Solver(instance)).solve_associated(state)


def is_T_valid(state: State, T, instance: Instance, solver: Solver | None = None) -> bool:
    return (solver or Solver(instance)).is_T_valid(state, T)


def is_valid(state: State, instance: Instance, solver: Solver | None = None) -> bool:
    return (solver or Solver(instance)).is_valid(state)


def opt_bounds(jobs, instance: Instance, solver: Solver | None = None) -> OptBounds:
    return (solver or Solver(instance)).opt_bounds(jobs)


def critical_type(T, instance: Instance) -> Optional[int]:
    T = as_rational(T)
    if T <= 0:
        return None
    for t, s in enumerate(instance.speeds):
        if s * T == instance.ell:
            return t
    return None


def max_freeness(state: State, instance: Instance, solver: Solver | None = None) -> Fraction:
    return (solver or Solver(instance)).max_freeness(state)
