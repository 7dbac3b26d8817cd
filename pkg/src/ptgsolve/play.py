"""Executable semantics: timed moves, play prices, strategy simulation."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .costfn import INF, ExtValue, Rational, as_fraction
from .model import Owner, Ptg
from .strategy import FpStrategy, LocationPlan, Move, Strategy, SwitchingStrategy


class MoveError(ValueError):
    """A strategy proposed a move the game does not allow."""


@dataclass(frozen=True)
class Configuration:
    location: str
    clock: Fraction

    def __str__(self) -> str:
        return f"({self.location}, {self.clock})"


@dataclass(frozen=True)
class Step:
    delay: Fraction
    transition: int
    cost: Fraction
    target: Configuration


@dataclass(frozen=True)
class Play:
    start: Configuration
    steps: tuple[Step, ...] = ()
    # transitions elided by cycle fast-forwarding, with their total cost
    skipped: int = 0
    skipped_cost: Fraction = Fraction(0)

    @property
    def last(self) -> Configuration:
        return self.steps[-1].target if self.steps else self.start

    @property
    def transitions(self) -> int:
        return len(self.steps) + self.skipped

    def path_cost(self) -> Fraction:
        return sum((s.cost for s in self.steps), Fraction(0)) + self.skipped_cost

    def completed(self, g: Ptg) -> bool:
        return g.location(self.last.location).is_final

    def configurations(self) -> list[Configuration]:
        return [self.start] + [s.target for s in self.steps]

    def extend(self, other: Play) -> Play:
        if other.start != self.last:
            raise ValueError("plays do not chain")
        return Play(
            self.start,
            self.steps + other.steps,
            self.skipped + other.skipped,
            self.skipped_cost + other.skipped_cost,
        )


def step(g: Ptg, s: Configuration, delay: Rational, transition: int) -> tuple[Configuration, Fraction]:
    """Let ``delay`` elapse in ``s`` and take ``transition``; returns the new
    configuration and the cost of the move."""
    delay = as_fraction(delay)
    loc = g.location(s.location)
    if loc.is_final:
        raise MoveError(f"{s}: final locations have no moves")
    if not 0 <= transition < len(g.transitions):
        raise MoveError(f"{s}: no transition #{transition}")
    t = g.transitions[transition]
    if t.source != s.location:
        raise MoveError(f"{s}: transition #{transition} leaves {t.source}")
    if delay < 0:
        raise MoveError(f"{s}: negative delay {delay}")
    if loc.urgent and delay != 0:
        raise MoveError(f"{s}: urgent location cannot wait {delay}")
    clock = s.clock + delay
    if clock not in t.guard:
        raise MoveError(f"{s}: guard {t.guard} of #{transition} violated at clock {clock}")
    cost = t.weight + delay * loc.rate
    return Configuration(t.target, Fraction(0) if t.reset else clock), cost


def play_cost(g: Ptg, play: Play) -> ExtValue:
    """Accumulated price plus the final cost; +inf if no final is reached."""
    if not play.completed(g):
        return INF
    end = play.last
    return play.path_cost() + g.location(end.location).final_cost(end.clock)


def _memoryless_until(sigma: Strategy) -> float | int:
    if isinstance(sigma, FpStrategy):
        return float("inf")
    if isinstance(sigma, SwitchingStrategy):
        return sigma.threshold
    return 0


def default_horizon(g: Ptg, *strategies: Strategy) -> int:
    k = max((s.threshold for s in strategies if isinstance(s, SwitchingStrategy)), default=0)
    return 4 * k + 4 * len(g.locations)


def simulate(
    g: Ptg,
    s0: Configuration,
    sigma_min: Strategy,
    sigma_max: Strategy,
    horizon: int | None = None,
    *,
    fast_forward: bool = False,
) -> Play:
    """Play the two strategies from ``s0`` for at most ``horizon`` transitions.

    With ``fast_forward``, a configuration repeated while both strategies are
    still memoryless is recognised as a cycle and whole periods are skipped
    (recorded in ``Play.skipped``).
    """
    if horizon is None:
        horizon = default_horizon(g, sigma_min, sigma_max)
    stable = min(_memoryless_until(sigma_min), _memoryless_until(sigma_max))
    steps: list[Step] = []
    seen: dict[Configuration, tuple[int, Fraction]] = {}
    done = 0  # transitions taken, including skipped ones
    skipped = 0
    skipped_cost = Fraction(0)
    cost_so_far = Fraction(0)
    cur = s0
    while done < horizon:
        loc = g.location(cur.location)
        if loc.is_final:
            break
        if fast_forward and done < stable:
            if cur in seen:
                i, c_i = seen[cur]
                period = done - i
                gain = cost_so_far - c_i
                limit = min(stable, horizon) - done
                m = limit // period if period else 0
                if m > 0:
                    skipped += m * period
                    skipped_cost += m * gain
                    done += m * period
                    cost_so_far += m * gain
                seen.clear()
                if done >= horizon:
                    break
            else:
                seen[cur] = (done, cost_so_far)
        sigma = sigma_min if loc.owner is Owner.MIN else sigma_max
        move = sigma.decide(cur.location, cur.clock, done)
        if move is None:
            if not g.outgoing(cur.location):
                break  # deadlock: the play never reaches a final location
            raise MoveError(f"{loc.owner.value} strategy has no move at {cur}")
        delay = move.delay(cur.clock)
        try:
            nxt, cost = step(g, cur, delay, move.transition)
        except MoveError as e:
            raise MoveError(f"{loc.owner.value} strategy: {e}") from None
        steps.append(Step(delay, move.transition, cost, nxt))
        cost_so_far += cost
        done += 1
        cur = nxt
    return Play(s0, tuple(steps), skipped, skipped_cost)


def random_fp_strategy(
    g: Ptg,
    owner: Owner | str,
    seed: int,
    breakpoints: Iterable[Rational] | None = None,
    max_points: int = 4,
) -> FpStrategy:
    """A random legal finite positional strategy for ``owner``.

    Breakpoints are a random subset of ``breakpoints`` (by default the
    candidate cutpoints of a simple game, else the guard endpoints), refined
    with the midpoints of the resulting intervals.
    """
    owner = Owner(owner)
    rng = random.Random(seed)
    top = g.clock_bound
    if breakpoints is None:
        if g.is_sptg():
            from .sptg import horizon, poss_cp

            top = horizon(g)
            breakpoints = poss_cp(g, top)
        else:
            breakpoints = {e for t in g.transitions for e in (t.guard.lo, t.guard.hi)}
    pool = sorted({as_fraction(b) for b in breakpoints if 0 < b < top})
    chosen = sorted(rng.sample(pool, min(len(pool), rng.randint(0, max_points))))
    coarse = [Fraction(0)] + chosen + [top]
    points = sorted(set(coarse) | {(a + b) / 2 for a, b in zip(coarse, coarse[1:])})
    plans = {}
    for loc in g.locations:
        if loc.owner is not owner:
            continue
        out = g.outgoing(loc.id)
        at = []
        for p in points:
            ok = [k for k in out if p in g.transitions[k].guard]
            at.append(Move(rng.choice(ok)) if ok else None)
        on = []
        for a, b in zip(points, points[1:]):
            now = [
                k
                for k in out
                if g.transitions[k].guard.lo <= a
                and b <= g.transitions[k].guard.hi
                and (a + b) / 2 in g.transitions[k].guard
            ]
            later = [] if loc.urgent else [k for k in out if b in g.transitions[k].guard]
            options = [Move(k) for k in now] + [Move(k, b) for k in later]
            on.append(rng.choice(options) if options else None)
        plans[loc.id] = LocationPlan(tuple(points), tuple(at), tuple(on)).canonical()
    return FpStrategy(plans)
