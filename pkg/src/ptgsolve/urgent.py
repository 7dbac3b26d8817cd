"""Value iteration for games in which no time may elapse.

At a fixed clock value every non-final location is urgent, so the game is a
min-cost reachability game on a finite graph.  Iteration starts from +inf
everywhere except at final locations and applies synchronous Bellman
updates; values that sink below the smallest possible finite value are
declared -inf.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

from .costfn import INF, NEG_INF, ExtValue, Rational, as_fraction, is_finite
from .model import Owner, Ptg, constants
from .strategy import switch_threshold

log = logging.getLogger(__name__)


class SolverAssertion(RuntimeError):
    """An internal bound guaranteed by the theory was violated."""


def neg_inf_threshold(g: Ptg) -> Fraction:
    """Finite values are never below ``-(n-1)W_T - W_fin``."""
    c = constants(g)
    return -(c.n - 1) * c.w_trans - c.w_fin


def iteration_bound(g: Ptg) -> int:
    """|L_f|·|L|·(2(|L|−1)W_T + 2W_fin + 1) + |L|."""
    c = constants(g)
    n_fin = len(g.finals)
    return int(n_fin * c.n * (2 * (c.n - 1) * c.w_trans + 2 * c.w_fin + 1)) + c.n


def poss_val_count(g: Ptg) -> int:
    c = constants(g)
    return int(len(g.finals) * (2 * (c.n - 1) * c.w_trans + 2 * c.w_fin + 1))


@dataclass(frozen=True)
class InstantValues:
    nu: Fraction
    values: dict[str, ExtValue]
    iterations: int
    # Min location -> transition realising its last strict decrease
    improved_by: dict[str, int | None]

    def __getitem__(self, loc: str) -> ExtValue:
        return self.values[loc]


def _check_urgent(g: Ptg, nu: Fraction, force_urgent: bool) -> None:
    if not force_urgent:
        lazy = [loc.id for loc in g.locations if not loc.is_final and not loc.urgent]
        if lazy:
            raise ValueError(f"non-urgent locations present: {', '.join(lazy)}")
    if any(t.reset for t in g.transitions):
        raise ValueError("instant games cannot contain resets")
    if nu < 0 or nu > g.clock_bound:
        raise ValueError(f"clock value {nu} outside [0, {g.clock_bound}]")


def _iterate(g: Ptg, nu: Fraction) -> Iterator[tuple[list[ExtValue], list[int | None]]]:
    graph = g.graph
    n = len(graph.ids)
    enabled = [
        [(k, tgt, w) for k, tgt, w in graph.out[i] if nu in g.transitions[k].guard]
        for i in range(n)
    ]
    cutoff = neg_inf_threshold(g)
    x: list[ExtValue] = [INF] * n
    for i, loc in enumerate(g.locations):
        if loc.is_final:
            x[i] = loc.final_cost(nu)
    improved: list[int | None] = [None] * n
    yield x, improved
    while True:
        pre = x
        x = list(pre)
        for i, owner in enumerate(graph.owner):
            if owner is Owner.FINAL:
                continue
            best: ExtValue = INF
            arg = None
            if owner is Owner.MIN:
                for k, tgt, w in enabled[i]:
                    v = w + pre[tgt]
                    if v < best:
                        best, arg = v, k
                if best < pre[i]:
                    improved[i] = arg
            elif enabled[i]:
                best = NEG_INF
                for k, tgt, w in enabled[i]:
                    v = w + pre[tgt]
                    if v > best:
                        best = v
            x[i] = best
        for i in range(n):
            if x[i] < cutoff:
                x[i] = NEG_INF
        yield x, improved
        if x == pre:
            return


def instant_iterates(g: Ptg, nu: Rational, force_urgent: bool = False) -> Iterator[list[ExtValue]]:
    """The vectors x^(0), x^(1), ... up to and including the fixed point."""
    nu = as_fraction(nu)
    _check_urgent(g, nu, force_urgent)
    for x, _ in _iterate(g, nu):
        yield list(x)


def solve_instant(
    g: Ptg, nu: Rational, *, force_urgent: bool = False, max_iterations: int | None = None
) -> InstantValues:
    """Values of every location at clock ``nu`` when no time may elapse.

    ``force_urgent`` treats non-urgent locations as urgent instead of
    rejecting them.
    """
    nu = as_fraction(nu)
    _check_urgent(g, nu, force_urgent)
    bound = iteration_bound(g)
    cap = bound if max_iterations is None else max_iterations
    steps = -1
    for x, improved in _iterate(g, nu):
        steps += 1
        if steps > cap:
            raise SolverAssertion(f"value iteration exceeded {cap} iterations (bound {bound})")
    ids = g.graph.ids
    return InstantValues(
        nu,
        dict(zip(ids, x)),
        steps,
        {ids[i]: improved[i] for i, o in enumerate(g.graph.owner) if o is Owner.MIN},
    )


def is_fixed_point(g: Ptg, nu: Rational, values: dict[str, ExtValue]) -> bool:
    nu = as_fraction(nu)
    graph = g.graph
    x = [values[i] for i in graph.ids]
    cutoff = neg_inf_threshold(g)
    for i, loc in enumerate(g.locations):
        if loc.is_final:
            if x[i] != loc.final_cost(nu):
                return False
            continue
        cand = [w + x[tgt] for k, tgt, w in graph.out[i] if nu in g.transitions[k].guard]
        if not cand:
            best: ExtValue = INF
        else:
            best = min(cand) if loc.owner is Owner.MIN else max(cand)
        if best < cutoff:
            best = NEG_INF
        if best != x[i]:
            return False
    return True


@dataclass(frozen=True)
class InstantStrategies:
    nu: Fraction
    max_choice: dict[str, int | None]
    min_nc: dict[str, int | None]
    min_attractor: dict[str, int | None]
    attractor_rank: dict[str, int | None]
    n_locations: int
    w_loc: Fraction
    w_trans: int
    fake_lower: ExtValue

    def threshold(self, n: int) -> int:
        """Switching threshold for the strategy pair at this single point."""
        return switch_threshold(self.n_locations, self.w_loc, self.w_trans, 1, self.fake_lower, n)


def attractor_ranks(g: Ptg, nu: Rational | None = None) -> tuple[dict[str, int | None], dict[str, int | None]]:
    """Min's attractor to the finals: rank per location and a rank-decreasing move.

    Only transitions enabled at ``nu`` are used (all of them if ``nu`` is None);
    resets are ignored, so callers pass reset-free games.
    """
    graph = g.graph
    n = len(graph.ids)

    def ok(k: int) -> bool:
        return nu is None or nu in g.transitions[k].guard

    rank: list[int | None] = [0 if o is Owner.FINAL else None for o in graph.owner]
    move: list[int | None] = [None] * n
    level = 0
    changed = True
    while changed:
        changed = False
        level += 1
        snapshot = list(rank)
        for i, owner in enumerate(graph.owner):
            if snapshot[i] is not None:
                continue
            edges = [(k, t) for k, t, _ in graph.out[i] if ok(k)]
            if owner is Owner.MIN:
                hits = [(snapshot[t], k) for k, t in edges if snapshot[t] is not None]
                if hits:
                    rank[i] = level
                    move[i] = min(hits)[1]
                    changed = True
            elif edges and all(snapshot[t] is not None for _, t in edges):
                rank[i] = level
                changed = True
    return dict(zip(graph.ids, rank)), dict(zip(graph.ids, move))


def extract_instant_strategies(g: Ptg, nu: Rational, x: InstantValues) -> InstantStrategies:
    """Optimal memoryless choices at clock ``nu`` from the fixed point ``x``.

    Max picks a successor maximising weight + value.  Min's first phase uses
    the transition that realised its last strict decrease during value
    iteration; every cycle those choices close has weight at most -1.  Its
    second phase follows the attractor.
    """
    nu = as_fraction(nu)
    if not is_fixed_point(g, nu, x.values):
        raise ValueError("values are not a fixed point of the Bellman operator")
    graph = g.graph
    vals = x.values
    max_choice: dict[str, int | None] = {}
    min_nc: dict[str, int | None] = {}
    for i, loc in enumerate(g.locations):
        if loc.is_final:
            continue
        edges = [(k, t, w) for k, t, w in graph.out[i] if nu in g.transitions[k].guard]
        if loc.owner is Owner.MAX:
            best = None
            best_val: ExtValue = NEG_INF
            for k, t, w in edges:
                v = w + vals[graph.ids[t]]
                if best is None or v > best_val:
                    best, best_val = k, v
            max_choice[loc.id] = best
        else:
            k = x.improved_by.get(loc.id)
            if k is None and edges:
                k = edges[0][0]
            min_nc[loc.id] = k
    rank, move = attractor_ranks(g, nu)
    c = constants(g)
    finite = [v for v in vals.values() if is_finite(v)]
    return InstantStrategies(
        nu,
        max_choice,
        min_nc,
        {k: move[k] for k in min_nc},
        rank,
        c.n,
        c.w_loc,
        c.w_trans,
        min(finite) if finite else INF,
    )
