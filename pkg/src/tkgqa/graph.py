"""Immutable temporal knowledge graph: quintuple facts with pattern queries.

A fact is a quintuple (s, r, o, t0, t1): subject entity ``s`` holds relation
``r`` towards object entity ``o`` over the closed integer interval
``[t0, t1]`` (years by default).  A graph derives its entity and relation
vocabularies from its facts, keeps facts in insertion order, and serves
wildcard pattern queries from per-field hash indexes.  Graphs are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

import json
import random
from pathlib import Path
from typing import IO, Iterable, Iterator, NamedTuple

from .errors import DuplicateFactError, InvalidIntervalError, ParseError

__all__ = [
    "Interval",
    "Fact",
    "QueryPattern",
    "TKG",
    "save_tkg",
    "load_tkg",
    "render_text",
    "DEFAULT_FACT_TEMPLATES",
]


class Interval(NamedTuple):
    """Closed integer interval [t0, t1]."""

    t0: int
    t1: int

    @property
    def length(self) -> int:
        return self.t1 - self.t0

    def contains_point(self, t: int) -> bool:
        return self.t0 <= t <= self.t1

    def overlaps(self, other: "Interval") -> bool:
        return self.t0 <= other.t1 and other.t0 <= self.t1

    def within(self, other: "Interval") -> bool:
        return other.t0 <= self.t0 and self.t1 <= other.t1


class Fact(NamedTuple):
    """One temporal fact: ``s`` holds ``r`` towards ``o`` over [t0, t1]."""

    s: str
    r: str
    o: str
    t0: int
    t1: int

    @property
    def interval(self) -> Interval:
        return Interval(self.t0, self.t1)

    @property
    def duration(self) -> int:
        return self.t1 - self.t0


class QueryPattern(NamedTuple):
    """Pattern over (s, r, o); ``None`` fields are wildcards."""

    s: str | None = None
    r: str | None = None
    o: str | None = None


class TKG:
    """Immutable fact store with entity/relation vocabularies.

    Facts are validated (interval order) and deduplicated at construction;
    insertion order is the canonical iteration order.
    """

    __slots__ = ("facts", "entities", "relations", "_by_s", "_by_r", "_by_o")

    def __init__(self, facts: Iterable[Fact | tuple] = ()):
        clean: list[Fact] = []
        seen: set[Fact] = set()
        by_s: dict[str, list[int]] = {}
        by_r: dict[str, list[int]] = {}
        by_o: dict[str, list[int]] = {}
        entities: set[str] = set()
        relations: set[str] = set()
        for i, raw in enumerate(facts):
            f = raw if isinstance(raw, Fact) else Fact(*raw)
            if not (f.s and f.r and f.o):
                raise ValueError(f"fact at index {i} has an empty id: {f!r}")
            if f.t0 > f.t1:
                raise InvalidIntervalError(index=i, t0=f.t0, t1=f.t1)
            if f in seen:
                raise DuplicateFactError(index=i, fact=f)
            seen.add(f)
            idx = len(clean)
            clean.append(f)
            by_s.setdefault(f.s, []).append(idx)
            by_r.setdefault(f.r, []).append(idx)
            by_o.setdefault(f.o, []).append(idx)
            entities.add(f.s)
            entities.add(f.o)
            relations.add(f.r)
        self.facts: tuple[Fact, ...] = tuple(clean)
        self.entities: frozenset[str] = frozenset(entities)
        self.relations: frozenset[str] = frozenset(relations)
        self._by_s = by_s
        self._by_r = by_r
        self._by_o = by_o

    def __len__(self) -> int:
        return len(self.facts)

    def __iter__(self) -> Iterator[Fact]:
        return iter(self.facts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TKG):
            return NotImplemented
        return self.facts == other.facts

    def __hash__(self) -> int:
        return hash(self.facts)

    def __repr__(self) -> str:
        return f"TKG({len(self.facts)} facts, {len(self.entities)} entities, {len(self.relations)} relations)"

    def query(self, s: str | None = None, r: str | None = None, o: str | None = None) -> list[Fact]:
        """Facts matching every bound field, in insertion order.

        Unknown ids match nothing; a fully unbound pattern matches all facts.
        Served from the narrowest hash index, then verified field by field
        (equivalent to a brute-force scan).
        """
        candidates: list[int] | range | None = None
        for bound, index in ((s, self._by_s), (r, self._by_r), (o, self._by_o)):
            if bound is None:
                continue
            rows = index.get(bound)
            if not rows:
                return []
            if candidates is None or len(rows) < len(candidates):
                candidates = rows
        if candidates is None:
            candidates = range(len(self.facts))
        out = []
        for idx in candidates:
            f = self.facts[idx]
            if (s is None or f.s == s) and (r is None or f.r == r) and (o is None or f.o == o):
                out.append(f)
        return out

    def query_pattern(self, p: QueryPattern) -> list[Fact]:
        return self.query(p.s, p.r, p.o)


# ---------------------------------------------------------------------------
# serialization: JSON Lines, keys exactly s, r, o, t0, t1

_FACT_KEYS = ("s", "r", "o", "t0", "t1")


def save_tkg(g: TKG, sink: str | Path | IO[str]) -> None:
    """Write one JSON object per fact, preserving order."""
    lines = [
        json.dumps({"s": f.s, "r": f.r, "o": f.o, "t0": f.t0, "t1": f.t1})
        for f in g.facts
    ]
    payload = "\n".join(lines) + ("\n" if lines else "")
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(payload, encoding="utf-8")
    else:
        sink.write(payload)


def _parse_fact_line(line_no: int, line: str) -> Fact:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ParseError(line_no, "fact line is not a JSON object")
    if set(obj) != set(_FACT_KEYS):
        raise ParseError(line_no, f"fact keys must be exactly {list(_FACT_KEYS)}, got {sorted(obj)}")
    for key in ("s", "r", "o"):
        if not isinstance(obj[key], str) or not obj[key]:
            raise ParseError(line_no, f"field {key!r} must be a non-empty string")
    for key in ("t0", "t1"):
        if isinstance(obj[key], bool) or not isinstance(obj[key], int):
            raise ParseError(line_no, f"field {key!r} must be an integer")
    if obj["t0"] > obj["t1"]:
        raise InvalidIntervalError(index=line_no - 1, t0=obj["t0"], t1=obj["t1"])
    return Fact(obj["s"], obj["r"], obj["o"], obj["t0"], obj["t1"])


def load_tkg(source: str | Path | IO[str]) -> TKG:
    """Parse a fact file written by :func:`save_tkg`; order is significant."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    facts = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        facts.append(_parse_fact_line(line_no, line))
    return TKG(facts)


# ---------------------------------------------------------------------------
# semi-structured natural-language rendering

DEFAULT_FACT_TEMPLATES = (
    "{s} had relation {r} with {o} from {t0} to {t1}.",
    "Between {t0} and {t1}, {s} was linked to {o} through {r}.",
    "{s} held {r} towards {o} during the period {t0} to {t1}.",
    "From {t0} until {t1}, the relation {r} connected {s} to {o}.",
)


def render_text(g: TKG, template_set: Iterable[str] | None = None, seed: int = 0) -> str:
    """Render one sentence per fact; template choice is seed-deterministic.

    Every field of every fact appears verbatim in its sentence, so the
    rendering is injective on facts for a fixed seed.
    """
    templates = tuple(template_set) if template_set is not None else DEFAULT_FACT_TEMPLATES
    if not templates:
        raise ValueError("template_set must be non-empty")
    rng = random.Random(seed)
    sentences = [
        rng.choice(templates).format(s=f.s, r=f.r, o=f.o, t0=f.t0, t1=f.t1)
        for f in g.facts
    ]
    return "\n".join(sentences)
