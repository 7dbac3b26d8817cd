"""Finitely represented strategies.

A plan for one location splits the clock domain into points and open
intervals and assigns each a :class:`Move`.  A move either takes a
transition at once or waits until a given clock value and then takes it.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Protocol, Sequence

from .costfn import ExtValue, Rational


@dataclass(frozen=True)
class Move:
    transition: int
    wait_until: Fraction | None = None

    def delay(self, clock: Rational) -> Fraction:
        if self.wait_until is None or self.wait_until <= clock:
            return Fraction(0)
        return self.wait_until - clock

    def __str__(self) -> str:
        if self.wait_until is None:
            return f"take #{self.transition}"
        return f"wait until {self.wait_until} then take #{self.transition}"


@dataclass(frozen=True)
class LocationPlan:
    points: tuple[Fraction, ...]
    at_points: tuple[Move | None, ...]
    on_intervals: tuple[Move | None, ...]

    def __post_init__(self) -> None:
        if len(self.at_points) != len(self.points) or len(self.on_intervals) != len(self.points) - 1:
            raise ValueError("inconsistent plan")

    @classmethod
    def uniform(cls, move: Move | None, lo: Rational, hi: Rational) -> LocationPlan:
        if lo == hi:
            return cls((Fraction(lo),), (move,), ())
        return cls((Fraction(lo), Fraction(hi)), (move, move), (move,))

    def move(self, clock: Rational) -> Move | None:
        pts = self.points
        if clock < pts[0] or clock > pts[-1]:
            return None
        i = bisect_left(pts, clock)
        if pts[i] == clock:
            return self.at_points[i]
        return self.on_intervals[i - 1]

    def canonical(self) -> LocationPlan:
        """Merge neighbouring intervals whose moves (and the point between) agree."""
        pts = [self.points[0]]
        at = [self.at_points[0]]
        on: list[Move | None] = []
        for i, m in enumerate(self.on_intervals):
            if on and on[-1] == m and at[-1] == m:
                pts[-1] = self.points[i + 1]
                at[-1] = self.at_points[i + 1]
            else:
                on.append(m)
                pts.append(self.points[i + 1])
                at.append(self.at_points[i + 1])
        return LocationPlan(tuple(pts), tuple(at), tuple(on))


class Strategy(Protocol):
    def decide(self, location: str, clock: Fraction, steps: int) -> Move | None: ...


@dataclass(frozen=True)
class FpStrategy:
    """Memoryless strategy given by one :class:`LocationPlan` per location."""

    plans: Mapping[str, LocationPlan]

    def decide(self, location: str, clock: Fraction, steps: int = 0) -> Move | None:
        plan = self.plans.get(location)
        return None if plan is None else plan.move(clock)

    def partition(self) -> tuple[Fraction, ...]:
        """pts(σ): every breakpoint used by some location."""
        return tuple(sorted(set().union(*(p.points for p in self.plans.values()))))

    def size(self) -> int:
        """|Int(σ)|: number of points and open intervals of the partition."""
        return max(1, 2 * len(self.partition()) - 1)

    def canonical(self) -> FpStrategy:
        return FpStrategy({k: p.canonical() for k, p in self.plans.items()})


@dataclass(frozen=True)
class SwitchingStrategy:
    """Play ``first`` until the play holds ``threshold`` transitions, then ``second``."""

    first: FpStrategy
    second: FpStrategy
    threshold: int

    def decide(self, location: str, clock: Fraction, steps: int = 0) -> Move | None:
        phase = self.first if steps < self.threshold else self.second
        return phase.decide(location, clock, steps)


def switch_threshold(
    n_locations: int,
    w_loc: Rational,
    w_trans: int,
    sigma_size: int,
    fake_lower: ExtValue,
    n: int,
) -> int:
    """K = |L|·(2W_L + 2|σ¹|·|L|·W_T + 3|σ¹| − max(−n, fakeVal)), rounded up."""
    # an infinite fake value carries no information; fall back to -n
    floor_val = Fraction(-n) if math.isinf(fake_lower) else max(Fraction(-n), fake_lower)
    k = n_locations * (
        2 * Fraction(w_loc) + 2 * sigma_size * n_locations * w_trans + 3 * sigma_size - floor_val
    )
    return max(0, math.ceil(k))


def plans_from_table(
    points: Sequence[Fraction],
    at_points: Mapping[str, Sequence[Move | None]],
    on_intervals: Mapping[str, Sequence[Move | None]],
) -> FpStrategy:
    return FpStrategy(
        {
            loc: LocationPlan(tuple(points), tuple(at_points[loc]), tuple(on_intervals[loc])).canonical()
            for loc in at_points
        }
    )
