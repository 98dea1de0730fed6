"""Configuration sets C(u) and the total order on (machine type, configuration)."""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple

from .core import COVERING, as_rational, objective_name

DEFAULT_CONFIG_CAP = 2_000_000


class ConfigurationCapExceeded(RuntimeError):
    pass


class Configuration(NamedTuple):
    counts: tuple
    load: Fraction


class OrderedIndex(NamedTuple):
    type: int
    config: Configuration
    completion: Fraction


def enumerate_configs(p, u, cap: int = DEFAULT_CONFIG_CAP):
    """All c in N^d with p.c <= u, as a set of Configuration."""
    sizes = [as_rational(x) for x in p]
    u = as_rational(u)
    if any(x <= 0 for x in sizes):
        raise ValueError("sizes must be positive")
    out = set()
    d = len(sizes)
    current = [0] * d

    def rec(j, room):
        if j == d:
            if len(out) >= cap:
                raise ConfigurationCapExceeded(f"more than {cap} configurations for bound {u}")
            counts = tuple(current)
            out.add(Configuration(counts, u - room if d else Fraction(0)))
            return
        k = 0
        while k * sizes[j] <= room:
            current[j] = k
            rec(j + 1, room - k * sizes[j])
            k += 1
        current[j] = 0

    if u >= 0:
        rec(0, u)
    return out


def ordered_index(t: int, config: Configuration, speeds) -> OrderedIndex:
    return OrderedIndex(t, config, config.load / as_rational(speeds[t]))


def order_key(index: OrderedIndex, objective="cmax"):
    """Sort key realizing the order: larger completion first (makespan) or
    smaller completion first (covering), then smaller type index, then the
    lexicographically smaller configuration vector."""
    if objective_name(objective) == COVERING:
        return (index.completion, index.type, index.config.counts)
    return (-index.completion, index.type, index.config.counts)


def compare(a: OrderedIndex, b: OrderedIndex, objective="cmax") -> int:
    """-1 if a precedes b, 1 if b precedes a, 0 if they are the same index."""
    ka, kb = order_key(a, objective), order_key(b, objective)
    return (ka > kb) - (ka < kb)


def sorted_indices(sizes, speeds, bound, objective="cmax"):
    """All (type, config) pairs for C(bound), in order."""
    configs = enumerate_configs(sizes, bound)
    items = [ordered_index(t, c, speeds) for t in range(len(speeds)) for c in configs]
    items.sort(key=lambda i: order_key(i, objective))
    return items
