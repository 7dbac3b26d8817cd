"""One-clock priced timed games: locations, guarded transitions, validation."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import cached_property
from typing import Iterable

from .costfn import AffineFn, Rational, as_fraction


class Owner(str, Enum):
    MIN = "min"
    MAX = "max"
    FINAL = "final"


@dataclass(frozen=True)
class Guard:
    """Clock interval with rational endpoints and open/closed flags."""

    lo: Fraction
    hi: Fraction
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", as_fraction(self.lo))
        object.__setattr__(self, "hi", as_fraction(self.hi))

    @classmethod
    def closed(cls, lo: Rational, hi: Rational) -> Guard:
        return cls(lo, hi, True, True)

    @classmethod
    def point(cls, c: Rational) -> Guard:
        return cls(c, c, True, True)

    def contains(self, x: Rational) -> bool:
        if x < self.lo or x > self.hi:
            return False
        if x == self.lo and not self.lo_closed:
            return False
        if x == self.hi and not self.hi_closed:
            return False
        return True

    __contains__ = contains

    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        return self.lo == self.hi and not (self.lo_closed and self.hi_closed)

    def closure(self) -> Guard:
        return Guard(self.lo, self.hi, True, True)

    def intersect(self, other: Guard) -> Guard:
        if self.lo > other.lo:
            lo, lo_closed = self.lo, self.lo_closed
        elif self.lo < other.lo:
            lo, lo_closed = other.lo, other.lo_closed
        else:
            lo, lo_closed = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hi_closed = self.hi, self.hi_closed
        elif self.hi > other.hi:
            hi, hi_closed = other.hi, other.hi_closed
        else:
            hi, hi_closed = self.hi, self.hi_closed and other.hi_closed
        return Guard(lo, hi, lo_closed, hi_closed)

    def __str__(self) -> str:
        return f"{'[' if self.lo_closed else '('}{self.lo},{self.hi}{']' if self.hi_closed else ')'}"


@dataclass(frozen=True)
class Location:
    id: str
    owner: Owner
    rate: Fraction = Fraction(0)
    urgent: bool = False
    final_cost: AffineFn | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "owner", Owner(self.owner))
        object.__setattr__(self, "rate", as_fraction(self.rate))

    @property
    def is_final(self) -> bool:
        return self.owner is Owner.FINAL


@dataclass(frozen=True)
class Transition:
    source: str
    target: str
    guard: Guard
    weight: int = 0
    reset: bool = False


@dataclass(frozen=True)
class GameConstants:
    w_trans: int
    w_loc: Fraction
    w_fin: Fraction
    n: int


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    message: str

    def __str__(self) -> str:
        return f"{self.level}: {self.message}"


@dataclass(frozen=True)
class _Graph:
    """Index-based view used by the solvers' inner loops."""

    ids: tuple[str, ...]
    index: dict[str, int]
    owner: tuple[Owner, ...]
    out: tuple[tuple[tuple[int, int, int], ...], ...]  # (transition index, target, weight)


@dataclass(frozen=True)
class Ptg:
    locations: tuple[Location, ...]
    transitions: tuple[Transition, ...]
    clock_bound: Fraction = Fraction(1)
    name: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "locations", tuple(self.locations))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "clock_bound", as_fraction(self.clock_bound))

    @cached_property
    def _by_id(self) -> dict[str, Location]:
        return {loc.id: loc for loc in self.locations}

    @cached_property
    def graph(self) -> _Graph:
        ids = tuple(loc.id for loc in self.locations)
        index = {x: i for i, x in enumerate(ids)}
        out: list[list[tuple[int, int, int]]] = [[] for _ in ids]
        for k, t in enumerate(self.transitions):
            out[index[t.source]].append((k, index[t.target], t.weight))
        return _Graph(ids, index, tuple(loc.owner for loc in self.locations), tuple(map(tuple, out)))

    def location(self, loc_id: str) -> Location:
        try:
            return self._by_id[loc_id]
        except KeyError:
            raise KeyError(f"unknown location {loc_id!r}") from None

    def outgoing(self, loc_id: str) -> list[int]:
        return [k for k, _, _ in self.graph.out[self.graph.index[loc_id]]]

    @property
    def finals(self) -> list[Location]:
        return [loc for loc in self.locations if loc.is_final]

    @property
    def has_resets(self) -> bool:
        return any(t.reset for t in self.transitions)

    def constants(self) -> GameConstants:
        return constants(self)

    def sptg_horizon(self) -> Fraction | None:
        """The shared ``r`` if every guard is ``[0, r]`` and nothing resets."""
        r = None
        for t in self.transitions:
            g = t.guard
            if t.reset or g.lo != 0 or not (g.lo_closed and g.hi_closed):
                return None
            if r is None:
                r = g.hi
            elif g.hi != r:
                return None
        if r is None:
            return self.clock_bound
        return r if r > 0 else None

    def is_sptg(self) -> bool:
        return self.sptg_horizon() is not None

    def replace(self, **changes) -> Ptg:
        data = dict(
            locations=self.locations,
            transitions=self.transitions,
            clock_bound=self.clock_bound,
            name=self.name,
        )
        data.update(changes)
        return Ptg(**data)


def constants(g: Ptg) -> GameConstants:
    w_trans = max((abs(t.weight) for t in g.transitions), default=0)
    w_loc = max((abs(loc.rate) for loc in g.locations if not loc.is_final), default=Fraction(0))
    w_fin = max(
        (
            max(abs(loc.final_cost(0)), abs(loc.final_cost(g.clock_bound)))
            for loc in g.locations
            if loc.is_final
        ),
        default=Fraction(0),
    )
    return GameConstants(w_trans, Fraction(w_loc), Fraction(w_fin), len(g.locations))


def validate(g: Ptg) -> list[Diagnostic]:
    """Structural checks; errors make the game unusable, warnings do not."""
    out: list[Diagnostic] = []

    def err(msg: str) -> None:
        out.append(Diagnostic("error", msg))

    if not g.locations:
        err("no locations")
    if g.clock_bound <= 0 or g.clock_bound.denominator != 1:
        err(f"clock bound {g.clock_bound} is not a positive integer")
    seen: set[str] = set()
    for loc in g.locations:
        if loc.id in seen:
            err(f"duplicate location {loc.id!r}")
        seen.add(loc.id)
        if loc.is_final:
            if loc.final_cost is None:
                err(f"final location {loc.id!r} has no final cost")
            if loc.urgent:
                err(f"final location {loc.id!r} cannot be urgent")
        else:
            if loc.final_cost is not None:
                err(f"non-final location {loc.id!r} has a final cost")
            if loc.rate.denominator != 1:
                err(f"rate of {loc.id!r} is not an integer")
    for k, t in enumerate(g.transitions):
        where = f"transition #{k} {t.source} -> {t.target}"
        if t.source not in seen:
            err(f"{where}: unknown source")
        elif g.location(t.source).is_final:
            err(f"{where}: final locations have no outgoing transitions")
        if t.target not in seen:
            err(f"{where}: unknown target")
        if int(t.weight) != t.weight:
            err(f"{where}: weight is not an integer")
        gd = t.guard
        if gd.is_empty():
            err(f"{where}: empty guard {gd}")
        if gd.lo < 0 or gd.hi > g.clock_bound:
            err(f"{where}: guard {gd} not inside [0, {g.clock_bound}]")
    if any(d.level == "error" for d in out):
        return out
    for loc in g.locations:
        if not loc.is_final and not g.outgoing(loc.id):
            out.append(Diagnostic("warning", f"{loc.id!r} has no outgoing transition (deadlock)"))
    return out


def errors(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.level == "error"]


def make_urgent(g: Ptg) -> Ptg:
    locs = tuple(
        loc if loc.is_final or loc.urgent else Location(loc.id, loc.owner, loc.rate, True)
        for loc in g.locations
    )
    return g.replace(locations=locs)
