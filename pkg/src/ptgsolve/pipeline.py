"""General one-clock games: regions, reset-acyclic and NRA decompositions.

Guards are removed by pairing every location with a clock region.  A game
without effective resets is then solved region by region from the right:
singleton regions are instant games, open regions are rescaled onto
``[0, 1]`` and handed to the simple-game solver.  Resets are handled either
bottom-up (when no reset lies on a cycle) or by unfolding the game into
reset-free copies (for negative-reset-acyclic games).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import networkx as nx

from . import sptg
from .costfn import INF, NEG_INF, AffineFn, CostFunction, ExtValue, Rational, as_fraction, glue, is_finite
from .model import Guard, Location, Owner, Ptg, Transition, constants
from .urgent import solve_instant

log = logging.getLogger(__name__)


# regions


def region_points(g: Ptg) -> list[Fraction]:
    pts = {Fraction(0), g.clock_bound}
    for t in g.transitions:
        pts.update((t.guard.lo, t.guard.hi))
    return sorted(p for p in pts if 0 <= p <= g.clock_bound)


def regions(g: Ptg) -> list[Guard]:
    """``{M_0}, (M_0, M_1), {M_1}, ..., {M_k}`` over the guard endpoints."""
    pts = region_points(g)
    out = [Guard.point(pts[0])]
    for a, b in zip(pts, pts[1:]):
        out += [Guard(a, b, False, False), Guard.point(b)]
    return out


def _is_point(r: Guard) -> bool:
    return r.lo == r.hi


@dataclass(frozen=True)
class RegionPtg:
    source: Ptg
    regions: tuple[Guard, ...]
    game: Ptg
    node: Mapping[tuple[str, int], str]  # (location, region index) -> node id
    key: Mapping[str, tuple[str, int]]
    # original transitions a region transition stems from; empty for waits
    origin: tuple[tuple[int, ...], ...]

    def is_wait(self, k: int) -> bool:
        return not self.origin[k]

    def is_effective_reset(self, k: int) -> bool:
        """A reset taken at a positive clock value."""
        t = self.game.transitions[k]
        return t.reset and self.key[t.source][1] != 0

    def effective_resets(self) -> list[int]:
        return [k for k in range(len(self.game.transitions)) if self.is_effective_reset(k)]

    def digraph(self) -> nx.DiGraph:
        dg = nx.DiGraph()
        dg.add_nodes_from(self.key)
        dg.add_edges_from((t.source, t.target) for t in self.game.transitions)
        return dg


def node_name(loc: str, region: Guard) -> str:
    return f"{loc}@{{{region.lo}}}" if _is_point(region) else f"{loc}@{region}"


def region_ptg(g: Ptg) -> RegionPtg:
    """Product of ``g`` with its clock regions.

    A transition of ``g`` is copied onto every region inside its guard
    (with the closure of the region as guard); parallel copies are merged
    keeping the weight that suits the owner.  Non-final, non-urgent
    locations get weight-0 waiting transitions between neighbouring
    regions, up to the last region where they still have a transition.
    """
    regs = regions(g)
    node: dict[tuple[str, int], str] = {}
    key: dict[str, tuple[str, int]] = {}
    locs: list[Location] = []
    for loc in g.locations:
        for i, r in enumerate(regs):
            nid = node_name(loc.id, r)
            node[(loc.id, i)] = nid
            key[nid] = (loc.id, i)
            locs.append(Location(nid, loc.owner, loc.rate, loc.urgent, loc.final_cost))
    merged: dict[tuple[str, str, bool], tuple[int, list[int], Guard]] = {}
    order: list[tuple[str, str, bool]] = []
    for k, t in enumerate(g.transitions):
        owner = g.location(t.source).owner
        for i, r in enumerate(regs):
            if t.guard.intersect(r).is_empty():
                continue
            src = node[(t.source, i)]
            dst = node[(t.target, 0 if t.reset else i)]
            mk = (src, dst, t.reset)
            if mk not in merged:
                merged[mk] = (t.weight, [k], r.closure())
                order.append(mk)
            else:
                w, ks, gd = merged[mk]
                better = max(w, t.weight) if owner is Owner.MAX else min(w, t.weight)
                merged[mk] = (better, ks + [k], gd)
    trans = [Transition(s, d, merged[(s, d, rs)][2], merged[(s, d, rs)][0], rs) for s, d, rs in order]
    origin = [tuple(merged[mk][1]) for mk in order]
    for loc in g.locations:
        if loc.is_final or loc.urgent:
            continue
        # waiting only makes sense while some transition is still ahead
        last = max(
            (
                i
                for i, r in enumerate(regs)
                for k in g.outgoing(loc.id)
                if not g.transitions[k].guard.intersect(r).is_empty()
            ),
            default=-1,
        )
        for i, r in enumerate(regs):
            if i + 1 > last:
                break
            if _is_point(r):
                trans.append(Transition(node[(loc.id, i)], node[(loc.id, i + 1)], r, 0, False))
                origin.append(())
            else:
                end = Guard.point(r.hi)
                trans.append(Transition(node[(loc.id, i)], node[(loc.id, i + 1)], end, 0, False))
                origin.append(())
    game = Ptg(tuple(locs), tuple(trans), g.clock_bound, f"region({g.name})" if g.name else "")
    return RegionPtg(g, tuple(regs), game, node, key, tuple(origin))


# solving without effective resets


@dataclass
class PipelineStats:
    instant_solves: int = 0
    window_solves: int = 0
    copies: int = 0
    converged: bool = True


@dataclass
class PipelineResult:
    game: Ptg
    values: dict[str, CostFunction]
    node_values: dict[str, CostFunction] = field(repr=False)
    windows: dict[int, sptg.ValueResult] = field(default_factory=dict, repr=False)
    stats: PipelineStats = field(default_factory=PipelineStats)

    def __getitem__(self, loc: str) -> CostFunction:
        return self.values[loc]

    def value(self, loc: str, clock: Rational) -> ExtValue:
        return self.values[loc](as_fraction(clock))


class _Externals:
    """Constant-valued exits of a window game, shared by value."""

    def __init__(self, prefix: str) -> None:
        self.prefix = prefix
        self.locations: list[Location] = []
        self.transitions: list[Transition] = []
        self._ids: dict[ExtValue, str] = {}

    def target(self, v: ExtValue, guard: Guard) -> str:
        if v in self._ids:
            return self._ids[v]
        nid = f"{self.prefix}{len(self._ids)}"
        self._ids[v] = nid
        if v == INF:
            # deadlock: nobody can move, the play never ends
            self.locations.append(Location(nid, Owner.MIN, urgent=True))
        elif v == NEG_INF:
            # Min may loop on a negative cycle for as long as it likes
            out = nid + "_out"
            self.locations += [
                Location(nid, Owner.MIN, urgent=True),
                Location(out, Owner.FINAL, final_cost=AffineFn(0, 0)),
            ]
            self.transitions += [
                Transition(nid, nid, guard, -1, False),
                Transition(nid, out, guard, 0, False),
            ]
        else:
            self.locations.append(Location(nid, Owner.FINAL, final_cost=AffineFn(0, v)))
        return nid


def _exit_value(
    rp: RegionPtg, k: int, values: Mapping[str, CostFunction], resets: Mapping[str, ExtValue], at: Fraction
) -> ExtValue | None:
    """Value reached through a transition leaving the current region, or
    None if the transition stays inside it."""
    t = rp.game.transitions[k]
    if rp.is_effective_reset(k):
        return resets.get(rp.key[t.target][0], INF)
    if rp.key[t.target][1] != rp.key[t.source][1]:
        return values[t.target](at)
    return None


def _solve_point(
    rp: RegionPtg,
    i: int,
    members: list[str],
    values: Mapping[str, CostFunction],
    resets: Mapping[str, ExtValue],
    stats: PipelineStats,
    max_iterations: int | None = None,
) -> dict[str, ExtValue]:
    c = rp.regions[i].lo
    guard = Guard.closed(0, 1)
    ext = _Externals("@x")
    locs: list[Location] = []
    trans: list[Transition] = []
    inside = set(members)
    for nid in members:
        loc = rp.game.location(nid)
        if loc.is_final:
            locs.append(Location(nid, Owner.FINAL, final_cost=AffineFn(0, loc.final_cost(c))))
        else:
            locs.append(Location(nid, loc.owner, 0, True))
    for k, t in enumerate(rp.game.transitions):
        if t.source not in inside:
            continue
        v = _exit_value(rp, k, values, resets, c)
        dst = t.target if v is None else ext.target(v, guard)
        trans.append(Transition(t.source, dst, guard, t.weight, False))
    g = Ptg(tuple(locs + ext.locations), tuple(trans + ext.transitions), 1)
    stats.instant_solves += 1
    x = solve_instant(g, 0, max_iterations=max_iterations)
    return {nid: x.values[nid] for nid in members}


def _solve_open(
    rp: RegionPtg,
    i: int,
    members: list[str],
    values: Mapping[str, CostFunction],
    resets: Mapping[str, ExtValue],
    stats: PipelineStats,
    windows: dict[int, sptg.ValueResult],
    max_iterations: int | None = None,
) -> dict[str, CostFunction]:
    reg = rp.regions[i]
    a, width = reg.lo, reg.hi - reg.lo
    guard = Guard.closed(0, 1)
    ext = _Externals("@x")
    locs: list[Location] = []
    trans: list[Transition] = []
    inside = set(members)
    for nid in members:
        loc = rp.game.location(nid)
        if loc.is_final:
            locs.append(Location(nid, Owner.FINAL, final_cost=loc.final_cost.reparametrized(a, width)))
        else:
            locs.append(Location(nid, loc.owner, loc.rate * width, loc.urgent))
    for k, t in enumerate(rp.game.transitions):
        if t.source not in inside:
            continue
        if rp.is_wait(k):
            # wait until the right end of the region, then continue there
            later = values[t.target](reg.hi)
            if is_finite(later):
                rate = rp.game.location(t.source).rate * width
                ext.locations.append(
                    Location(f"{t.source}^wait", Owner.FINAL, final_cost=AffineFn(-rate, rate + later))
                )
                dst = f"{t.source}^wait"
            else:
                dst = ext.target(later, guard)
        else:
            v = _exit_value(rp, k, values, resets, reg.hi)
            dst = t.target if v is None else ext.target(v, guard)
        trans.append(Transition(t.source, dst, guard, t.weight, False))
    h = Ptg(tuple(locs + ext.locations), tuple(trans + ext.transitions), 1)
    stats.window_solves += 1
    res = sptg.solve(h, max_iterations=max_iterations)
    windows[i] = res
    # y in [a, b]  <->  (y - a) / width in [0, 1]
    return {nid: res.values[nid].reparametrized(-a / width, 1 / width) for nid in members}


def solve_reset_free(
    rp: RegionPtg,
    reset_values: Mapping[str, ExtValue] | None = None,
    nodes: Iterable[str] | None = None,
    stats: PipelineStats | None = None,
    max_iterations: int | None = None,
) -> PipelineResult:
    """Solve the region game with every effective reset replaced by an exit
    worth ``reset_values[target]`` (+inf when missing).

    ``nodes`` restricts the computation to a set of region nodes closed
    under successors (apart from effective resets).
    """
    resets = dict(reset_values or {})
    stats = stats if stats is not None else PipelineStats()
    wanted = set(rp.key) if nodes is None else set(nodes)
    values: dict[str, CostFunction] = {}
    windows: dict[int, sptg.ValueResult] = {}
    by_region: dict[int, list[str]] = {}
    for nid in rp.game.graph.ids:
        if nid in wanted:
            by_region.setdefault(rp.key[nid][1], []).append(nid)
    for i in reversed(range(len(rp.regions))):
        members = by_region.get(i, [])
        if not members:
            continue
        reg = rp.regions[i]
        if _is_point(reg):
            vals = _solve_point(rp, i, members, values, resets, stats, max_iterations)
            for nid, v in vals.items():
                values[nid] = CostFunction.point(v, reg.lo)
        else:
            values.update(_solve_open(rp, i, members, values, resets, stats, windows, max_iterations))
    per_loc: dict[str, CostFunction] = {}
    for loc in rp.source.locations:
        ids = [rp.node[(loc.id, i)] for i in range(len(rp.regions))]
        if all(nid in values for nid in ids):
            per_loc[loc.id] = glue(values[nid] for nid in ids)
    return PipelineResult(rp.source, per_loc, values, windows, stats)


# reset-acyclic games


class ResetCycleError(ValueError):
    def __init__(self, cycle: list[str]) -> None:
        self.cycle = cycle
        super().__init__("reset on a cycle: " + " -> ".join(cycle))


def reset_cycle(rp: RegionPtg) -> list[str] | None:
    """A cycle of the region graph through an effective reset, if any."""
    dg = rp.digraph()
    for k in rp.effective_resets():
        t = rp.game.transitions[k]
        if nx.has_path(dg, t.target, t.source):
            return nx.shortest_path(dg, t.target, t.source) + [t.target]
    return None


def _reset_order(rp: RegionPtg) -> list[str]:
    """Reset targets, each after every target it can reach."""
    dg = rp.digraph()
    targets = {rp.key[rp.game.transitions[k].target][0] for k in rp.effective_resets()}
    deps = nx.DiGraph()
    deps.add_nodes_from(targets)
    for t in targets:
        seen = nx.descendants(dg, rp.node[(t, 0)]) | {rp.node[(t, 0)]}
        for k in rp.effective_resets():
            tr = rp.game.transitions[k]
            if tr.source in seen:
                deps.add_edge(t, rp.key[tr.target][0])
    return list(reversed(list(nx.topological_sort(deps))))


def reset_acyclic_solve(g: Ptg | RegionPtg, max_iterations: int | None = None) -> PipelineResult:
    """Values of a game in which no reset lies on a cycle."""
    rp = g if isinstance(g, RegionPtg) else region_ptg(g)
    cyc = reset_cycle(rp)
    if cyc is not None:
        raise ResetCycleError(cyc)
    dg = rp.digraph()
    stats = PipelineStats()
    known: dict[str, ExtValue] = {}
    for t in _reset_order(rp):
        start = rp.node[(t, 0)]
        part = solve_reset_free(rp, known, nx.descendants(dg, start) | {start}, stats, max_iterations)
        known[t] = part.node_values[start](0)
        log.debug("reset target %s: value %s at 0", t, known[t])
    res = solve_reset_free(rp, known, stats=stats, max_iterations=max_iterations)
    stats.copies = 1
    return res


# negative-reset-acyclic games


def value_bounds(g: Ptg) -> tuple[Fraction, Fraction]:
    """(V_inf, V_sup): finite values of a κ-NRA game lie in between."""
    c = constants(g)
    n, m, k = c.n, g.clock_bound, len(regions(g))
    sup = n * m * c.w_loc + n * k * c.w_trans + c.w_fin
    inf = -n * m * c.w_loc - n * n * (n * k + k + 1) * c.w_trans - c.w_fin
    return Fraction(inf), Fraction(sup)


def copy_count(g: Ptg, kappa: Rational) -> int:
    kappa = as_fraction(kappa)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    lo, hi = value_bounds(g)
    return max(1, math.ceil(2 * constants(g).n * (hi - lo) / kappa))


@dataclass(frozen=True)
class CycleRange:
    nodes: tuple[str, ...]
    low: Fraction
    high: Fraction

    def meets(self, kappa: Fraction | None) -> bool:
        """Whether some play along the cycle has price in [-κ, 0); with
        ``kappa=None``, whether that holds for every κ > 0."""
        if self.low == self.high:
            return kappa is not None and -kappa <= self.low < 0
        if kappa is None:
            return self.low < 0 <= self.high
        return self.low < 0 and self.high > -kappa


@dataclass(frozen=True)
class NraReport:
    verdict: str  # "verified" | "violation" | "inconclusive"
    kappa: Fraction | None  # None: the question is whether some κ works
    cycles: int
    witness: CycleRange | None = None
    # every κ strictly below this passes the check (None when unknown)
    kappa_sup: ExtValue | None = None
    note: str = ""

    @property
    def ok(self) -> bool:
        return self.verdict == "verified"


def _edge_span(rp: RegionPtg, k: int) -> tuple[Fraction, Fraction]:
    """Price range of taking region transition ``k`` after any admissible delay."""
    t = rp.game.transitions[k]
    reg = rp.regions[rp.key[t.source][1]]
    swing = rp.game.location(t.source).rate * (reg.hi - reg.lo)
    return t.weight + min(Fraction(0), swing), t.weight + max(Fraction(0), swing)


def _cycle_range(rp: RegionPtg, cycle: list[str], edges: Mapping[tuple[str, str], list[int]]) -> CycleRange | None:
    """Exact price range of the plays following ``cycle`` from clock 0 back
    to clock 0.  Extreme prices are reached with clock values at region
    endpoints, so a dynamic program over those values is enough."""
    start = next(i for i, nid in enumerate(cycle) if rp.key[nid][1] == 0)
    path = cycle[start:] + cycle[:start] + [cycle[start]]
    ends = sorted({r.lo for r in rp.regions} | {r.hi for r in rp.regions})
    # clock value -> (min price, max price)
    states: dict[Fraction, tuple[Fraction, Fraction]] = {Fraction(0): (Fraction(0), Fraction(0))}
    for u, v in zip(path, path[1:]):
        reg = rp.regions[rp.key[u][1]]
        rate = rp.game.location(u).rate
        urgent = rp.game.location(u).urgent
        nxt: dict[Fraction, tuple[Fraction, Fraction]] = {}
        for c, (lo, hi) in states.items():
            for d in ends:
                if d < c or not reg.lo <= d <= reg.hi or (urgent and d != c):
                    continue
                for k in edges[(u, v)]:
                    t = rp.game.transitions[k]
                    if d not in t.guard:
                        continue
                    after = Fraction(0) if t.reset else d
                    cost = t.weight + rate * (d - c)
                    old = nxt.get(after)
                    cand = (lo + cost, hi + cost)
                    nxt[after] = cand if old is None else (min(old[0], cand[0]), max(old[1], cand[1]))
        states = nxt
    if Fraction(0) not in states:
        return None
    lo, hi = states[Fraction(0)]
    return CycleRange(tuple(path), lo, hi)


def check_nra(g: Ptg | RegionPtg, kappa: Rational | None, max_cycles: int = 20000) -> NraReport:
    """Best-effort test of the κ-NRA condition: every play from ``(ℓ, 0)``
    back to ``(ℓ, 0)`` costs ``≥ 0`` or ``< −κ``.  With ``kappa=None`` the
    question is whether the condition holds for some κ > 0.

    A violation comes with a concrete cycle.  Verification bounds every
    simple cycle of each strongly connected part of the region graph that
    touches clock value 0, delaying freely inside each region; closed walks
    are unions of such cycles, so uniform signs carry over.
    """
    if kappa is not None:
        kappa = as_fraction(kappa)
        if kappa <= 0:
            raise ValueError("kappa must be positive")
    rp = g if isinstance(g, RegionPtg) else region_ptg(g)
    dg = rp.digraph()
    edges: dict[tuple[str, str], list[int]] = {}
    for k, t in enumerate(rp.game.transitions):
        edges.setdefault((t.source, t.target), []).append(k)
    anchored = {nid for nid, (_, i) in rp.key.items() if i <= 1}
    count = 0
    sup: ExtValue = INF
    undecided = False
    for comp in nx.strongly_connected_components(dg):
        if not comp & anchored:
            continue
        sub = dg.subgraph(comp)
        if sub.number_of_edges() == 0:
            continue
        spans = []
        for cyc in nx.simple_cycles(sub):
            count += 1
            if count > max_cycles:
                return NraReport("inconclusive", kappa, count - 1, note=f"more than {max_cycles} cycles")
            if any(rp.key[nid][1] == 0 for nid in cyc):
                exact = _cycle_range(rp, cyc, edges)
                if exact is not None and exact.meets(kappa):
                    return NraReport("violation", kappa, count, exact)
            lo = hi = Fraction(0)
            for u, v in zip(cyc, cyc[1:] + cyc[:1]):
                ranges = [_edge_span(rp, k) for k in edges[(u, v)]]
                lo += min(r[0] for r in ranges)
                hi += max(r[1] for r in ranges)
            spans.append((lo, hi))
        if all(lo >= 0 for lo, _ in spans):
            continue
        worst = max(hi for _, hi in spans)
        if worst < 0:
            sup = min(sup, -worst)
        else:
            undecided = True
    if undecided:
        return NraReport("inconclusive", kappa, count, note="cycles of both signs share a component")
    if (kappa is None and sup > 0) or (kappa is not None and kappa < sup):
        return NraReport("verified", kappa, count, kappa_sup=sup)
    return NraReport("inconclusive", kappa, count, kappa_sup=sup, note=f"only verified for kappa < {sup}")


class NotNraError(ValueError):
    def __init__(self, report: NraReport) -> None:
        self.report = report
        if report.witness is not None:
            w = report.witness
            bad = "every [-kappa, 0)" if report.kappa is None else f"[-{report.kappa}, 0)"
            msg = f"cycle {' -> '.join(w.nodes)} has prices in [{w.low}, {w.high}], meeting {bad}"
        else:
            msg = f"could not verify the condition for kappa = {report.kappa}: {report.note}"
        super().__init__(msg)


def solve_nra(
    g: Ptg,
    kappa: Rational,
    *,
    assert_nra: bool = False,
    copies: int | None = None,
    short_circuit: bool = True,
    max_iterations: int | None = None,
) -> PipelineResult:
    """Values of a κ-NRA game through reset-free copies.

    Copy 0 sends every effective reset to +inf; copy ``i`` sends it to the
    values of copy ``i − 1`` at clock 0.  Values under the lower bound of
    finite values are -inf.  Iteration stops at a fixed point (later copies
    would repeat it) unless ``short_circuit`` is off, and after ``copies``
    copies at most (default: the bound on the copies needed).
    """
    kappa = as_fraction(kappa)
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    rp = region_ptg(g)
    report = check_nra(rp, kappa)
    if report.verdict == "violation" or (report.verdict == "inconclusive" and not assert_nra):
        raise NotNraError(report)
    low, _ = value_bounds(g)
    cap = copy_count(g, kappa) if copies is None else copies
    if cap < 1:
        raise ValueError("at least one copy is needed")
    targets = sorted({rp.key[rp.game.transitions[k].target][0] for k in rp.effective_resets()})
    stats = PipelineStats(converged=False)
    current: dict[str, ExtValue] = {t: INF for t in targets}
    res = None
    for _ in range(cap):
        res = solve_reset_free(rp, current, stats=stats, max_iterations=max_iterations)
        stats.copies += 1
        nxt = {}
        for t in targets:
            v = res.node_values[rp.node[(t, 0)]](0)
            nxt[t] = NEG_INF if v < low else v
        if nxt == current:
            stats.converged = True
            if short_circuit:
                break
        current = nxt
    if not targets:
        stats.converged = True
    res.stats = stats
    log.debug("nra: %d copies, converged=%s", stats.copies, stats.converged)
    return res
