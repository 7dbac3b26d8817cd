"""Games used across the test suite."""

from __future__ import annotations

import random
from fractions import Fraction

from ptgsolve.costfn import AffineFn
from ptgsolve.gamefile import load_fixture
from ptgsolve.model import Guard, Location, Owner, Ptg, Transition

UNIT = Guard.closed(0, 1)


def fig1() -> Ptg:
    return load_fixture("fig1.sptg")


def fig3(w: int) -> Ptg:
    """Untimed game where Min must loop long enough before leaving.

    Rates are 0, so declaring the locations urgent does not change values.
    """
    locs = (
        Location("l1", Owner.MAX, urgent=True),
        Location("l2", Owner.MIN, urgent=True),
        Location("lf", Owner.FINAL, final_cost=AffineFn(0, 0)),
    )
    trans = (
        Transition("l1", "lf", UNIT, -w),
        Transition("l1", "l2", UNIT, -1),
        Transition("l2", "l1", UNIT, 0),
        Transition("l2", "lf", UNIT, 0),
    )
    return Ptg(locs, trans, 1, f"fig3-W{w}")


def unreachable() -> Ptg:
    """The target cannot be reached from a or b."""
    locs = (
        Location("a", Owner.MIN, urgent=True),
        Location("b", Owner.MAX, urgent=True),
        Location("f", Owner.FINAL, final_cost=AffineFn(0, 3)),
    )
    trans = (Transition("a", "b", UNIT, 1), Transition("b", "a", UNIT, -2))
    return Ptg(locs, trans, 1, "unreachable")


def max_escape() -> Ptg:
    """Max can keep the play away from the target forever."""
    locs = (
        Location("m", Owner.MAX, urgent=True),
        Location("n", Owner.MIN, urgent=True),
        Location("f", Owner.FINAL, final_cost=AffineFn(0, 0)),
    )
    trans = (Transition("m", "n", UNIT, 0), Transition("m", "f", UNIT, 0), Transition("n", "m", UNIT, 5))
    return Ptg(locs, trans, 1, "max-escape")


def negative_loop(w: int = -1) -> Ptg:
    """Min controls a cycle of weight ``w`` with an exit to the target."""
    locs = (
        Location("a", Owner.MIN, urgent=True),
        Location("f", Owner.FINAL, final_cost=AffineFn(0, 0)),
    )
    trans = (Transition("a", "a", UNIT, w), Transition("a", "f", UNIT, 0))
    return Ptg(locs, trans, 1, "negative-loop")


def two_step_negative() -> Ptg:
    """Min cycle a -> b -> a of weight -1 through a Min location b."""
    locs = (
        Location("a", Owner.MIN, urgent=True),
        Location("b", Owner.MIN, urgent=True),
        Location("f", Owner.FINAL, final_cost=AffineFn(0, 2)),
    )
    trans = (
        Transition("a", "b", UNIT, -3),
        Transition("b", "a", UNIT, 2),
        Transition("b", "f", UNIT, 0),
    )
    return Ptg(locs, trans, 1, "two-step-negative")


def random_sptg(
    rng: random.Random,
    max_locations: int = 6,
    max_weight: int = 8,
    r: Fraction = Fraction(1),
    urgent_p: float = 0.2,
) -> Ptg:
    """A random simple game with at most ``max_locations`` locations
    (finals included) and weights, rates and final costs bounded by
    ``max_weight``."""
    n_total = rng.randint(2, max_locations)
    n_final = rng.randint(1, min(2, n_total - 1))
    n_play = n_total - n_final
    # small weights make crossings of final costs inside the window common
    w = rng.choice(sorted({1, 2, max_weight}))
    rate = rng.choice((w, max_weight))
    ids = [f"q{i}" for i in range(n_play)]
    fins = [f"t{i}" for i in range(n_final)]
    locs = []
    for i in ids:
        owner = rng.choice((Owner.MIN, Owner.MAX))
        locs.append(Location(i, owner, rng.randint(-rate, rate), rng.random() < urgent_p))
    for f in fins:
        locs.append(
            Location(
                f,
                Owner.FINAL,
                final_cost=AffineFn(rng.randint(-max_weight, max_weight), rng.randint(-w, w)),
            )
        )
    guard = Guard.closed(0, r)
    trans = []
    for i in ids:
        pool = [j for j in ids if j != i] + fins
        targets = rng.sample(pool, rng.randint(min(2, len(pool)), min(3, len(pool))))
        for t in targets:
            trans.append(Transition(i, t, guard, rng.randint(-w, w)))
    return Ptg(tuple(locs), tuple(trans), 1, f"random-{rng.random():.6f}")


def seeded_sptg(seed: int, **kw) -> Ptg:
    return random_sptg(random.Random(seed), **kw)


GUARD_CHOICES = (
    Guard.closed(0, 1),
    Guard(0, 1, True, False),
    Guard(0, 1, False, True),
    Guard(0, 1, False, False),
    Guard.point(0),
    Guard.point(1),
)


def random_ptg(
    rng: random.Random,
    n_play: int = 3,
    max_weight: int = 3,
    max_rate: int = 2,
    reset_p: float = 0.0,
    clock_bound: int = 1,
) -> Ptg:
    """A random one-clock game with guards over integer endpoints."""
    ids = [f"p{i}" for i in range(n_play)]
    locs = [
        Location(i, rng.choice((Owner.MIN, Owner.MAX)), rng.randint(-max_rate, max_rate), rng.random() < 0.1)
        for i in ids
    ]
    locs.append(Location("goal", Owner.FINAL, final_cost=AffineFn(rng.randint(-2, 2), rng.randint(-2, 2))))
    trans = []
    for i in ids:
        for t in rng.sample(ids + ["goal"], rng.randint(1, min(3, n_play + 1))):
            lo = rng.randint(0, clock_bound - 1) if clock_bound > 1 else 0
            base = rng.choice(GUARD_CHOICES)
            guard = Guard(base.lo + lo, base.hi + lo, base.lo_closed, base.hi_closed)
            trans.append(Transition(i, t, guard, rng.randint(-max_weight, max_weight), rng.random() < reset_p))
    return Ptg(tuple(locs), tuple(trans), clock_bound, f"ptg-{rng.random():.6f}")


def random_nra(rng: random.Random, kappa=1, tries: int = 500) -> Ptg:
    """A random game whose resets lie on cycles and that the checker
    verifies as κ-NRA (rejection sampling)."""
    from ptgsolve.pipeline import check_nra, region_ptg, reset_cycle

    for _ in range(tries):
        g = random_ptg(rng, n_play=3, reset_p=0.4)
        rp = region_ptg(g)
        if reset_cycle(rp) is not None and check_nra(rp, kappa).ok:
            return g
    raise RuntimeError("no NRA game found")
