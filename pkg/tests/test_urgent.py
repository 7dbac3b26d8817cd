"""Value iteration at a fixed clock value."""

import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from ptgsolve.costfn import INF, NEG_INF, AffineFn, is_finite
from ptgsolve.model import Location, Owner, Ptg, constants, make_urgent
from ptgsolve.play import Configuration, play_cost, simulate
from ptgsolve.strategy import FpStrategy, LocationPlan, Move, SwitchingStrategy
from ptgsolve.urgent import (
    InstantValues,
    extract_instant_strategies,
    instant_iterates,
    is_fixed_point,
    iteration_bound,
    neg_inf_threshold,
    poss_val_count,
    solve_instant,
)

from gamebank import fig1, fig3, negative_loop, random_sptg, two_step_negative, unreachable
from oracles import bounded_values


def test_fig1_at_one():
    x = solve_instant(make_urgent(fig1()), 1)
    assert x.values == {"l1": 0, "l2": 1, "l3": -7, "l4": -7, "l5": 1, "l6": 1, "l7": 0, "lf": 0}


def test_fig3_untimed():
    x = solve_instant(fig3(5), 0)
    assert x["l1"] == -5 and x["l2"] == -5


def test_target_only():
    g = Ptg((Location("lf", Owner.FINAL, final_cost=AffineFn(2, 0)),), (), 1)
    assert solve_instant(g, F(1, 2))["lf"] == 1


def test_min_negative_cycle_is_minus_infinity():
    assert solve_instant(negative_loop(), 0)["a"] == NEG_INF
    assert solve_instant(two_step_negative(), 0)["a"] == NEG_INF


def test_unreachable_target_is_plus_infinity():
    x = solve_instant(unreachable(), 0)
    assert x["a"] == INF and x["b"] == INF


def test_non_urgent_rejected():
    with pytest.raises(ValueError):
        solve_instant(fig1(), F(1, 2))
    assert solve_instant(fig1(), F(1, 2), force_urgent=True)["l4"] == -7


def test_fig3_strategies():
    g = fig3(5)
    x = solve_instant(g, 0)
    s = extract_instant_strategies(g, 0, x)
    t = g.transitions
    assert (t[s.max_choice["l1"]].source, t[s.max_choice["l1"]].target) == ("l1", "lf")
    assert t[s.min_nc["l2"]].target == "l1"
    assert t[s.min_attractor["l2"]].target == "lf"


def test_single_transition_chosen():
    g = negative_loop(0).replace(transitions=negative_loop(0).transitions[1:])
    s = extract_instant_strategies(g, 0, solve_instant(g, 0))
    assert s.min_nc["a"] == 0


def test_fig1_min_exits_at_one():
    g = make_urgent(fig1())
    s = extract_instant_strategies(g, 1, solve_instant(g, 1))
    assert g.transitions[s.min_nc["l1"]].target == "lf"


def test_extraction_needs_fixed_point():
    g = fig3(5)
    fake = InstantValues(F(0), {"l1": F(0), "l2": F(0), "lf": F(0)}, 0, {"l2": None})
    assert not is_fixed_point(g, 0, fake.values)
    with pytest.raises(ValueError):
        extract_instant_strategies(g, 0, fake)


def test_cutoff_fires_exactly_at_threshold():
    # a single pass through a -> f costs exactly the threshold; no loop
    locs = (
        Location("a", Owner.MIN, urgent=True),
        Location("b", Owner.MIN, urgent=True),
        Location("f", Owner.FINAL, final_cost=AffineFn(0, -1)),
    )
    from ptgsolve.model import Guard, Transition

    unit = Guard.closed(0, 1)
    g = Ptg(locs, (Transition("a", "b", unit, -2), Transition("b", "f", unit, -2)), 1)
    assert neg_inf_threshold(g) == -(3 - 1) * 2 - 1
    assert solve_instant(g, 0)["a"] == -5


# properties


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), nu=st.fractions(0, 1, max_denominator=12))
def test_iterates_decrease(seed, nu):
    """Property: every location's iterate is non-increasing."""
    g = random_sptg(random.Random(seed), max_locations=5)
    xs = list(instant_iterates(g, nu, force_urgent=True))
    for a, b in zip(xs, xs[1:]):
        assert all(v <= u for u, v in zip(a, b))


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10**6), nu=st.fractions(0, 1, max_denominator=12))
def test_iterates_are_bounded_horizon_values(seed, nu):
    """Property: the i-th iterate is the value of the game cut after i transitions."""
    g = random_sptg(random.Random(seed), max_locations=4)
    xs = list(instant_iterates(g, nu, force_urgent=True))
    brute = bounded_values(g, nu, 5)
    floor = neg_inf_threshold(g)
    ids = g.graph.ids
    for i in range(6):
        x = xs[min(i, len(xs) - 1)]
        below = [k for k in ids if brute[i][k] not in (INF, -INF) and brute[i][k] < floor]
        if below:
            assert all(x[ids.index(k)] == NEG_INF for k in below)
            break
        assert dict(zip(ids, x)) == brute[i]


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 10**6), nu=st.fractions(0, 1, max_denominator=12))
def test_values_in_possible_set(seed, nu):
    """Property: finite values are integer translates of final costs within the span."""
    g = random_sptg(random.Random(seed), max_locations=6)
    x = solve_instant(g, nu, force_urgent=True)
    c = constants(g)
    span = (c.n - 1) * c.w_trans
    finals = [l.final_cost(nu) for l in g.finals]
    poss = {f + k for f in finals for k in range(-span, span + 1)}
    assert len(poss) <= poss_val_count(g)
    for v in x.values.values():
        assert not is_finite(v) or v in poss
    assert x.iterations <= iteration_bound(g)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), nu=st.fractions(0, 1, max_denominator=12))
def test_extracted_strategies_realise_values(seed, nu):
    """Property: the extracted strategies played against each other yield the value."""
    g = make_urgent(random_sptg(random.Random(seed), max_locations=5))
    x = solve_instant(g, nu)
    s = extract_instant_strategies(g, nu, x)

    def fp(choice):
        return FpStrategy({k: LocationPlan.uniform(None if m is None else Move(m), 0, 1) for k, m in choice.items()})

    finite = [v for v in x.values.values() if is_finite(v)]
    n = 1 + max(0, -min(finite)) if finite else 1
    sigma_min = SwitchingStrategy(fp(s.min_nc), fp(s.min_attractor), s.threshold(n))
    sigma_max = fp(s.max_choice)
    for loc in g.locations:
        v = x[loc.id]
        if loc.is_final or not is_finite(v):
            continue
        p = simulate(g, Configuration(loc.id, nu), sigma_min, sigma_max, fast_forward=True)
        assert p.completed(g)
        assert play_cost(g, p) == v
