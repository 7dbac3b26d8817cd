"""Value functions and strategies of simple priced timed games.

A simple game has every guard equal to ``[0, r]`` and no resets.  The value
functions are built right to left.  At the current right end ``r`` every
non-urgent location gets a final clone that encodes "wait until ``r`` and
collect the value there"; in the resulting all-urgent game the values are
affine between consecutive candidate cutpoints, and pieces are accepted as
long as their slopes are compatible with waiting in the original game.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .costfn import AffineFn, CostFunction, ExtValue, Rational, as_fraction, is_finite
from .model import Guard, Location, Owner, Ptg, Transition, constants
from .strategy import FpStrategy, LocationPlan, Move, SwitchingStrategy, switch_threshold
from .urgent import (
    InstantStrategies,
    SolverAssertion,
    attractor_ranks,
    extract_instant_strategies,
    solve_instant,
)

log = logging.getLogger(__name__)

WAIT_SUFFIX = "^wait"


def horizon(g: Ptg) -> Fraction:
    r = g.sptg_horizon()
    if r is None:
        raise ValueError("not a simple game: guards must all be [0, r] and no resets allowed")
    return r


def fg_set(g: Ptg) -> list[AffineFn]:
    """Integer translates k + φ of the final costs with |k| ≤ (n−1)·W_T."""
    c = constants(g)
    span = (c.n - 1) * c.w_trans
    out = []
    for loc in g.finals:
        for k in range(-span, span + 1):
            out.append(loc.final_cost.shifted(k))
    return list(dict.fromkeys(out))


def _crossing_data(g: Ptg) -> tuple[list[tuple[Fraction, Fraction]], int]:
    lines = sorted({(loc.final_cost.slope, loc.final_cost.intercept) for loc in g.finals})
    pairs = []
    for i, (ai, bi) in enumerate(lines):
        for aj, bj in lines[i + 1:]:
            if ai != aj:
                pairs.append((ai - aj, bj - bi))
    c = constants(g)
    return pairs, 2 * (c.n - 1) * c.w_trans


def poss_cp(g: Ptg, r: Rational | None = None) -> list[Fraction]:
    """Candidate cutpoints in ``[0, r]``: crossings of members of ``fg_set``.

    The endpoints 0 and ``r`` are always included.
    """
    r = horizon(g) if r is None else as_fraction(r)
    pairs, span = _crossing_data(g)
    pts = {Fraction(0), r}
    for s, c in pairs:
        # x = (d + c) / s with |d| ≤ span, kept when 0 ≤ x ≤ r
        lo, hi = sorted((-c, s * r - c))
        for d in range(max(-span, math.ceil(lo)), min(span, math.floor(hi)) + 1):
            pts.add((d + c) / s)
    return sorted(pts)


def _next_candidate(pairs: list[tuple[Fraction, Fraction]], span: int, b: Fraction) -> Fraction:
    """max(PossCp ∩ [0, b)), with 0 as the fallback."""
    best = Fraction(0)
    for s, c in pairs:
        t = s * b - c  # x < b  <=>  d < t (s > 0)  or  d > t (s < 0)
        if s > 0:
            d = min(span, math.ceil(t) - 1)
            if d < -span:
                continue
        else:
            d = max(-span, math.floor(t) + 1)
            if d > span:
                continue
        x = (d + c) / s
        if best < x < b:
            best = x
    return best


@dataclass(frozen=True)
class _Pruned:
    game: Ptg
    verdict: dict[str, ExtValue]
    kept: tuple[int, ...]  # pruned transition index -> original index


def _prune(g: Ptg) -> _Pruned:
    r = horizon(g)
    x = solve_instant(g, r, force_urgent=True)
    verdict = {loc: v for loc, v in x.values.items() if not is_finite(v)}
    locs = tuple(loc for loc in g.locations if loc.id not in verdict)
    kept = tuple(
        k
        for k, t in enumerate(g.transitions)
        if t.source not in verdict and t.target not in verdict
    )
    pruned = g.replace(locations=locs, transitions=tuple(g.transitions[k] for k in kept))
    return _Pruned(pruned, verdict, kept)


def prune_infinite(g: Ptg) -> tuple[Ptg, dict[str, ExtValue]]:
    """Remove locations whose value is ±inf (constant over the whole domain)."""
    p = _prune(g)
    return p.game, p.verdict


def _unique(base: str, taken: set[str]) -> str:
    name = base
    while name in taken:
        name += "'"
    taken.add(name)
    return name


def waiting(g: Ptg, r: Rational, x: Mapping[str, Rational]) -> Ptg:
    """Add to every non-urgent non-final location a final clone whose cost
    ``(r − ν)·rate + x[loc]`` prices waiting until ``r``; guards become ``[0, r]``.

    The clone transitions come after the original ones, in location order.
    """
    r = as_fraction(r)
    guard = Guard.closed(0, r)
    taken = {loc.id for loc in g.locations}
    locs = list(g.locations)
    trans = [Transition(t.source, t.target, guard, t.weight, False) for t in g.transitions]
    for loc in g.locations:
        if loc.is_final or loc.urgent:
            continue
        clone = _unique(loc.id + WAIT_SUFFIX, taken)
        cost = AffineFn(-loc.rate, r * loc.rate + as_fraction(x[loc.id]))
        locs.append(Location(clone, Owner.FINAL, final_cost=cost))
        trans.append(Transition(loc.id, clone, guard, 0, False))
    return Ptg(tuple(locs), tuple(trans), r, g.name)


def slope_test(
    values_b: Mapping[str, ExtValue],
    values_a: Mapping[str, ExtValue],
    a: Rational,
    b: Rational,
    g: Ptg,
) -> bool:
    """Whether the all-urgent values on ``[a, b]`` are compatible with waiting.

    A non-urgent Min location needs slope ≥ −rate (waiting never beats the
    piece), a non-urgent Max location needs slope ≤ −rate.
    """
    if a == b:
        raise ValueError("degenerate interval")
    width = Fraction(b) - Fraction(a)
    for loc in g.locations:
        if loc.is_final or loc.urgent:
            continue
        slope = (values_b[loc.id] - values_a[loc.id]) / width
        if loc.owner is Owner.MIN and slope < -loc.rate:
            return False
        if loc.owner is Owner.MAX and slope > -loc.rate:
            return False
    return True


@dataclass
class SolveStats:
    instant_calls: int = 0
    iterations: int = 0
    windows: int = 0
    pieces: int = 0
    window_bound: int = 0
    cutpoint_bound: int = 0


@dataclass
class ValueResult:
    game: Ptg
    values: dict[str, CostFunction]
    max_strategy: FpStrategy
    min_strategy: SwitchingStrategy
    sweep: tuple[Fraction, ...]
    stats: SolveStats = field(default_factory=SolveStats)

    def __getitem__(self, loc: str) -> CostFunction:
        return self.values[loc]

    def value(self, loc: str, clock: Rational) -> ExtValue:
        return self.values[loc](as_fraction(clock))

    def min_strategy_for(self, n: Rational) -> SwitchingStrategy:
        """Min's switching strategy with the threshold recomputed for ``n``."""
        s = self.min_strategy
        k = _threshold(self.game, s.first, self.values, n)
        return SwitchingStrategy(s.first, s.second, k)


def _certificate(
    gp: Ptg, nu: Fraction, strat: InstantStrategies, r: Fraction
) -> tuple[dict[str, AffineFn], Fraction, Fraction]:
    """Affine value forms read off the optimal choices at ``nu`` and the
    interval around ``nu`` on which those choices stay optimal."""
    graph = gp.graph
    choice: dict[str, int | None] = {**strat.max_choice, **strat.min_nc}
    alpha: dict[str, AffineFn] = {}
    for loc in gp.locations:
        if loc.is_final:
            alpha[loc.id] = loc.final_cost
    for loc in gp.locations:
        path = []
        cur = loc.id
        while cur not in alpha:
            if cur in path:
                raise SolverAssertion(f"optimal choices close a cycle through {cur}")
            path.append(cur)
            k = choice[cur]
            if k is None:
                raise SolverAssertion(f"no choice at {cur}")
            cur = gp.transitions[k].target
        for p in reversed(path):
            t = gp.transitions[choice[p]]
            alpha[p] = alpha[t.target].shifted(t.weight)
    lo, hi = Fraction(0), r
    for i, loc in enumerate(gp.locations):
        if loc.is_final:
            continue
        av = alpha[loc.id]
        for k, tgt, w in graph.out[i]:
            h = alpha[graph.ids[tgt]].shifted(w)
            s = h.slope - av.slope
            c = h.intercept - av.intercept
            if s == 0:
                continue
            root = -c / s
            # Min needs h ≥ av, Max needs h ≤ av
            if (s > 0) == (loc.owner is Owner.MIN):
                lo = max(lo, root)
            else:
                hi = min(hi, root)
    if not lo <= nu <= hi:
        raise SolverAssertion(f"certificate at {nu} does not hold: [{lo}, {hi}]")
    return alpha, lo, hi


@dataclass
class _Piece:
    a: Fraction
    b: Fraction
    window: Fraction
    strat: InstantStrategies


def _moves_from(strat: InstantStrategies) -> dict[str, int | None]:
    return {**strat.max_choice, **strat.min_nc}


def _assemble(
    g: Ptg,
    pr: _Pruned,
    top: Fraction,
    top_strat: InstantStrategies,
    pieces: list[_Piece],
) -> dict[str, LocationPlan]:
    """Glue per-window choices into plans over ``[0, top]`` (one per location
    of the pruned game).  A clone move means "wait until the window's right
    end and do what is prescribed there"."""
    base = len(pr.game.transitions)
    orig = pr.kept
    at_point: dict[Fraction, dict[str, Move | None]] = {}
    top_moves = _moves_from(top_strat)
    at_point[top] = {
        loc: (None if k is None else Move(orig[k])) for loc, k in top_moves.items()
    }
    intervals: list[tuple[Fraction, Fraction, dict[str, Move | None]]] = []
    for pc in pieces:  # right to left
        moves: dict[str, Move | None] = {}
        for loc, k in _moves_from(pc.strat).items():
            if loc not in top_moves:
                continue  # clone locations of the window game
            if k is None:
                moves[loc] = None
            elif k < base:
                moves[loc] = Move(orig[k])
            else:
                ahead = at_point[pc.window][loc]
                moves[loc] = Move(
                    ahead.transition,
                    ahead.wait_until if ahead.wait_until is not None else pc.window,
                )
        intervals.append((pc.a, pc.b, moves))
        at_point[pc.a] = moves
    points = sorted(at_point)
    intervals.reverse()
    plans = {}
    for loc in top_moves:
        plans[loc] = LocationPlan(
            tuple(points),
            tuple(at_point[p][loc] for p in points),
            tuple(m[loc] for _, _, m in intervals),
        ).canonical()
    return plans


def _threshold(g: Ptg, first: FpStrategy, values: Mapping[str, CostFunction], n: Rational | None = None) -> int:
    c = constants(g)
    finite = [f.min_value() for f in values.values() if f.is_finite_everywhere()]
    low = min(finite) if finite else Fraction(0)
    if n is None:
        n = 1 + max(Fraction(0), -low)
    mins = FpStrategy({k: p for k, p in first.plans.items() if g.location(k).owner is Owner.MIN})
    return switch_threshold(c.n, c.w_loc, c.w_trans, mins.size(), low, n)


def exp_cutpoint_bound(g: Ptg) -> int:
    """W_T⁴·n⁹ with W_T clamped to at least 1."""
    c = constants(g)
    return max(1, c.w_trans) ** 4 * c.n ** 9


def solve(g: Ptg, *, accelerate: bool = True, max_iterations: int | None = None) -> ValueResult:
    """Value function of every location and optimal strategies.

    ``accelerate`` skips candidate cutpoints that lie inside an interval on
    which the current optimal choices are certified; the result is the same
    as visiting every candidate.
    """
    top = horizon(g)
    stats = SolveStats()
    pr = _prune(g)
    G = pr.game
    stats.instant_calls += 1
    c = constants(G)
    n_fg = len(G.finals) * (2 * (c.n - 1) * c.w_trans + 1)
    stats.window_bound = c.n * (n_fg**2 + 2)
    stats.cutpoint_bound = exp_cutpoint_bound(g)
    cap = stats.window_bound if max_iterations is None else max_iterations

    x_top = solve_instant(G, top, force_urgent=True)
    stats.instant_calls += 1
    stats.iterations += x_top.iterations
    top_strat = extract_instant_strategies(G, top, x_top)
    nonfinal = [loc.id for loc in G.locations if not loc.is_final]
    f_b: dict[str, Fraction] = {k: x_top.values[k] for k in nonfinal}
    segs: dict[str, list[tuple[Fraction, Fraction]]] = {k: [(top, f_b[k])] for k in nonfinal}
    pieces: list[_Piece] = []
    sweep = [top]
    r = top
    while r > 0 and nonfinal:
        stats.windows += 1
        if stats.windows > cap:
            raise SolverAssertion(f"sweep exceeded {cap} windows")
        gp = waiting(G, r, f_b)
        pairs, span = _crossing_data(gp)
        b = r
        while b > 0:
            p = _next_candidate(pairs, span, b)
            if accelerate:
                mu = (p + b) / 2
                inst = solve_instant(gp, mu, force_urgent=True)
                strat = extract_instant_strategies(gp, mu, inst)
                alpha, lo, hi = _certificate(gp, mu, strat, r)
                if hi < b:
                    raise SolverAssertion(f"certificate at {mu} stops at {hi} < {b}")
                a = lo
                x_a = {k: alpha[k](a) for k in nonfinal}
                if any(alpha[k](b) != f_b[k] for k in nonfinal):
                    raise SolverAssertion(f"window values disagree at {b}")
                stats.instant_calls += 1
                stats.iterations += inst.iterations
            else:
                a = p
                inst_a = solve_instant(gp, a, force_urgent=True)
                x_a = {k: inst_a.values[k] for k in nonfinal}
                mu = (a + b) / 2
                inst = solve_instant(gp, mu, force_urgent=True)
                strat = extract_instant_strategies(gp, mu, inst)
                stats.instant_calls += 2
                stats.iterations += inst_a.iterations + inst.iterations
            if not slope_test(f_b, x_a, a, b, G):
                log.debug("window %s: slope test fails on [%s, %s]", r, a, b)
                break
            log.debug("window %s: accept [%s, %s]", r, a, b)
            for k in nonfinal:
                segs[k].append((a, x_a[k]))
            pieces.append(_Piece(a, b, r, strat))
            stats.pieces += 1
            f_b = x_a
            b = a
        if b == r:
            raise SolverAssertion(f"no progress in the window ending at {r}")
        r = b
        sweep.append(r)
    if not nonfinal:
        sweep.append(Fraction(0))

    values: dict[str, CostFunction] = {}
    for loc in g.locations:
        if loc.is_final:
            values[loc.id] = CostFunction.affine(loc.final_cost, 0, top)
        elif loc.id in pr.verdict:
            values[loc.id] = CostFunction.constant(pr.verdict[loc.id], 0, top)
        else:
            pts = list(reversed(segs[loc.id]))
            values[loc.id] = CostFunction.from_values([p for p, _ in pts], [v for _, v in pts])

    plans = _assemble(g, pr, top, top_strat, pieces)
    # locations with infinite value: choices at the right end, kept constant
    x_full = solve_instant(g, top, force_urgent=True)
    full = extract_instant_strategies(g, top, x_full)
    for loc_id in pr.verdict:
        k = _moves_from(full).get(loc_id)
        plans[loc_id] = LocationPlan.uniform(None if k is None else Move(k), 0, top)

    owner = {loc.id: loc.owner for loc in g.locations}
    max_plans = {k: p for k, p in plans.items() if owner[k] is Owner.MAX}
    min_plans = {k: p for k, p in plans.items() if owner[k] is Owner.MIN}
    _, attr = attractor_ranks(g)
    second = {}
    for k in min_plans:
        move = attr.get(k)
        if move is None:
            out = g.outgoing(k)
            move = out[0] if out else None
        second[k] = LocationPlan.uniform(None if move is None else Move(move), 0, top)
    first = FpStrategy(min_plans)
    result = ValueResult(
        g,
        values,
        FpStrategy(max_plans),
        SwitchingStrategy(first, FpStrategy(second), 0),
        tuple(sweep),
        stats,
    )
    result.min_strategy = SwitchingStrategy(first, FpStrategy(second), _threshold(g, first, values))
    _check(result)
    return result


def _check(res: ValueResult) -> None:
    """Cheap consistency checks that double as bug detectors."""
    g = res.game
    for loc in g.locations:
        f = res.values[loc.id]
        if len(f.inner_cutpoints()) > res.stats.cutpoint_bound:
            raise SolverAssertion(f"{loc.id}: {len(f.inner_cutpoints())} cutpoints exceed the bound")
        if loc.is_final or loc.urgent or not f.is_finite_everywhere():
            continue
        if not f.is_continuous():
            raise SolverAssertion(f"{loc.id}: value function is not continuous")
        for s in f.slopes_in(f.lo, f.hi):
            if (loc.owner is Owner.MIN and s < -loc.rate) or (loc.owner is Owner.MAX and s > -loc.rate):
                raise SolverAssertion(f"{loc.id}: slope {s} violates the rate bound {-loc.rate}")
