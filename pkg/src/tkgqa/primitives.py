"""Low-level temporal algorithms shared by all question solvers.

Four primitives (chronological sort, time-point/overlap/containment filters,
counting, duration filters) plus interval-union merging.  All functions are
pure over immutable inputs; duration of a fact is ``t1 - t0``.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from typing import Iterable, Sequence

from .graph import Fact, Interval

__all__ = [
    "sort_facts",
    "TimeFilter",
    "filter_time",
    "count_facts",
    "DurationPredicate",
    "filter_duration",
    "merge_intervals",
    "tie_break_key",
]


def tie_break_key(f: Fact) -> tuple:
    """Canonical total order over facts: (t0, t1, s, r, o)."""
    return (f.t0, f.t1, f.s, f.r, f.o)


def sort_facts(facts: Iterable[Fact], endpoint: str = "start", descending: bool = False) -> list[Fact]:
    """Chronological sort by t0 (endpoint="start") or t1 (endpoint="end").

    Ties are broken by the full (t0, t1, s, r, o) order, so the result is a
    deterministic permutation of the input.  ``descending`` reverses the
    entire comparison.
    """
    if endpoint not in ("start", "end"):
        raise ValueError(f"endpoint must be 'start' or 'end', got {endpoint!r}")

    def key(f: Fact) -> tuple:
        lead = f.t0 if endpoint == "start" else f.t1
        return (lead, f.t0, f.t1, f.s, f.r, f.o)

    return sorted(facts, key=key, reverse=descending)


@dataclass(frozen=True)
class TimeFilter:
    """Predicate over a fact's interval.

    Kinds: ``at_point(t)`` keeps facts with t0 <= t <= t1; ``overlaps(a, b)``
    keeps facts whose interval intersects [a, b]; ``contained_in(a, b)`` keeps
    facts with a <= t0 and t1 <= b.
    """

    kind: str
    a: int
    b: int

    @classmethod
    def at_point(cls, t: int) -> "TimeFilter":
        return cls("at_point", t, t)

    @classmethod
    def overlaps(cls, a: int, b: int) -> "TimeFilter":
        return cls("overlaps", a, b)

    @classmethod
    def contained_in(cls, a: int, b: int) -> "TimeFilter":
        return cls("contained_in", a, b)

    def matches(self, t0: int, t1: int) -> bool:
        if self.kind == "at_point":
            return t0 <= self.a <= t1
        if self.kind == "overlaps":
            return t0 <= self.b and self.a <= t1
        if self.kind == "contained_in":
            return self.a <= t0 and t1 <= self.b
        raise ValueError(f"unknown TimeFilter kind {self.kind!r}")


def filter_time(facts: Iterable[Fact], flt: TimeFilter) -> list[Fact]:
    """Order-preserving subset of facts matching the time filter."""
    return [f for f in facts if flt.matches(f.t0, f.t1)]


def count_facts(facts: Sequence[Fact]) -> int:
    return len(facts)


_COMPARATORS = {
    "<": operator.lt,
    "<=": operator.le,
    "=": operator.eq,
    "==": operator.eq,
    ">=": operator.ge,
    ">": operator.gt,
}

DURATION_COMPARATORS = ("<", "<=", "=", ">=", ">")


@dataclass(frozen=True)
class DurationPredicate:
    """Compare a fact's duration (t1 - t0) against a threshold."""

    comparator: str
    threshold: int

    def __post_init__(self):
        if self.comparator not in _COMPARATORS:
            raise ValueError(f"unknown comparator {self.comparator!r}")

    def matches(self, duration: int) -> bool:
        return _COMPARATORS[self.comparator](duration, self.threshold)


def filter_duration(facts: Iterable[Fact], pred: DurationPredicate) -> list[Fact]:
    """Order-preserving subset of facts whose duration satisfies the predicate."""
    return [f for f in facts if pred.matches(f.duration)]


def merge_intervals(intervals: Iterable[Interval | tuple[int, int]]) -> tuple[list[Interval], int]:
    """Merge closed intervals into a disjoint sorted cover of their union.

    Two intervals merge when they overlap or share an endpoint
    (``next.t0 <= prev.t1`` after sorting); [2000, 2005] and [2005, 2009]
    merge, [2006, 2010] and [2012, 2020] do not.  Returns the merged
    intervals and the total length ``sum(t1 - t0)`` over them.
    """
    ivs = sorted(Interval(iv[0], iv[1]) for iv in intervals)
    merged: list[Interval] = []
    for iv in ivs:
        if merged and iv.t0 <= merged[-1].t1:
            if iv.t1 > merged[-1].t1:
                merged[-1] = Interval(merged[-1].t0, iv.t1)
        else:
            merged.append(iv)
    total = sum(iv.t1 - iv.t0 for iv in merged)
    return merged, total
