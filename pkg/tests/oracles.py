"""Reference computations that share no code with the solvers.

Only the data model (games, guards, cost functions) is reused.
"""

from __future__ import annotations

import math
import random
from fractions import Fraction
from functools import lru_cache

from ptgsolve.model import Owner, Ptg

INF = math.inf


def _opt(owner: Owner, vals: list) -> object:
    if not vals:
        return INF
    return min(vals) if owner is Owner.MIN else max(vals)


def column_game(g: Ptg, x: Fraction, exits: dict[str, object]) -> dict[str, object]:
    """Value of the zero-delay game at clock ``x``.

    ``exits`` maps a location to the value of an extra option (waiting),
    which may be infinite.  Plain value iteration from +inf, with values
    below the smallest simple-path price declared -inf.
    """
    ids = [loc.id for loc in g.locations]
    owner = {loc.id: loc.owner for loc in g.locations}
    final = {loc.id: loc.final_cost(x) for loc in g.locations if loc.is_final}
    edges = {i: [] for i in ids}
    for t in g.transitions:
        if x in t.guard and t.source not in final:
            edges[t.source].append((t.target, t.weight))
    w_t = max((abs(t.weight) for t in g.transitions), default=0)
    ends = [v for v in list(final.values()) + list(exits.values()) if v not in (INF, -INF)]
    floor = -(len(ids) - 1) * w_t + min(ends, default=0)
    val = {i: final.get(i, INF) for i in ids}
    while True:
        new = {}
        for i in ids:
            if i in final:
                new[i] = final[i]
                continue
            opts = [w + val[j] for j, w in edges[i]]
            if i in exits:
                opts.append(exits[i])
            v = _opt(owner[i], opts)
            if v != INF and v != -INF and v < floor:
                v = -INF
            new[i] = v
        if new == val:
            return val
        val = new


def grid_values(g: Ptg, n: int) -> dict[str, list]:
    """Values of the discretised game on clocks {0, 1/n, ..., M}.

    A player may take an enabled transition or (outside urgent locations)
    wait exactly one grid step, paying rate/n.  Waiting is only allowed
    while some transition of the location is still enabled at or after the
    next grid point.  The game must be reset-free.
    """
    top = g.clock_bound
    steps = int(top * n)
    grid = [Fraction(i, n) for i in range(steps + 1)]
    table: dict[str, list] = {loc.id: [None] * (steps + 1) for loc in g.locations}
    for i in range(steps, -1, -1):
        exits = {}
        if i < steps:
            for loc in g.locations:
                if loc.is_final or loc.urgent:
                    continue
                if _live_after(g, loc.id, grid[i + 1]):
                    exits[loc.id] = Fraction(loc.rate, n) + table[loc.id][i + 1]
        col = column_game(g, grid[i], exits)
        for k, v in col.items():
            table[k][i] = v
    return table


def _live_after(g: Ptg, loc: str, x: Fraction) -> bool:
    for t in g.transitions:
        if t.source != loc:
            continue
        gd = t.guard
        if gd.hi > x or (gd.hi == x and gd.hi_closed):
            return True
    return False


def bounded_values(g: Ptg, nu: Fraction, horizon: int) -> list[dict[str, object]]:
    """Val^i at clock ``nu`` for i = 0..horizon: optimal price over plays of
    at most i transitions without delays (+inf when the target is missed)."""

    @lru_cache(maxsize=None)
    def val(loc: str, i: int):
        l = g.location(loc)
        if l.is_final:
            return l.final_cost(nu)
        if i == 0:
            return INF
        opts = [t.weight + val(t.target, i - 1) for t in g.transitions if t.source == loc and nu in t.guard]
        return _opt(l.owner, opts)

    return [{loc.id: val(loc.id, i) for loc in g.locations} for i in range(horizon + 1)]


def bellman_residuals(values, g: Ptg, points) -> list[tuple[str, Fraction, object, object]]:
    """Points where a value function fails the one-step optimality equation.

    At clock ``nu`` the candidates are every enabled transition and, outside
    urgent locations, waiting until the next cutpoint of the location's own
    value function.
    """
    bad = []
    for loc in g.locations:
        if loc.is_final:
            continue
        f = values[loc.id]
        for nu in points:
            v = f(nu)
            if v in (INF, -INF):
                continue
            opts = [t.weight + values[t.target](nu) for t in g.transitions if t.source == loc.id and nu in t.guard]
            if not loc.urgent and nu < f.hi:
                c = min(c for c in f.cuts if c > nu)
                opts.append((c - nu) * loc.rate + f(c))
            best = _opt(loc.owner, opts)
            if best != v:
                bad.append((loc.id, nu, v, best))
    return bad


def random_rationals(rng: random.Random, count: int, lo: Fraction = Fraction(0), hi: Fraction = Fraction(1)):
    out = []
    for _ in range(count):
        den = rng.choice((1, 2, 3, 7, 10, 64, 97, 1000))
        out.append(lo + (hi - lo) * Fraction(rng.randint(0, den), den))
    return out
