"""Acceptance criteria 1-9, one test each.

Every test reports a PASS/FAIL line (shown in the terminal summary).
"""

import random
import time
from fractions import Fraction as F
from functools import lru_cache

from ptgsolve import cli, sptg
from ptgsolve.costfn import INF, NEG_INF, AffineFn, CostFunction, is_finite
from ptgsolve.gamefile import format_game, load_fixture
from ptgsolve.model import Guard, Location, Owner, Ptg, Transition, constants
from ptgsolve.pipeline import check_nra, copy_count, solve_nra
from ptgsolve.play import Configuration, play_cost, random_fp_strategy, simulate
from ptgsolve.urgent import instant_iterates, iteration_bound, neg_inf_threshold, solve_instant

from gamebank import fig1, fig3, max_escape, negative_loop, random_nra, random_sptg, two_step_negative, unreachable
from oracles import bellman_residuals, bounded_values, grid_values, random_rationals

FIG3_WEIGHTS = (1, 10, 100, 1000)
SUITE4 = range(500)
SUITE5 = range(10_000, 10_200)
GRID = 64


@lru_cache(maxsize=None)
def suite4_game(seed):
    g = random_sptg(random.Random(seed), max_locations=6, max_weight=8)
    return g, sptg.solve(g)


@lru_cache(maxsize=None)
def suite5_game(seed):
    g = random_sptg(random.Random(seed), max_locations=4)
    return g, sptg.solve(g)


def test_criterion_1_fig1_golden(verdict):
    with verdict(1, "fig1 value functions exact, under 1 s"):
        start = time.perf_counter()
        res = sptg.solve(load_fixture("fig1.sptg"))
        elapsed = time.perf_counter() - start
        l1 = res["l1"]
        assert l1.cuts == (0, F(1, 4), F(1, 2), F(3, 4), F(9, 10), 1)
        assert l1.points == (F(-19, 2), -6, F(-11, 2), -2, F(-1, 5), 0)
        assert res["l4"] == CostFunction.affine(AffineFn(-3, -4))
        assert res["l7"] == CostFunction.affine(AffineFn(16, -16))
        assert res.value("l3", 0) == -10
        assert res.value("l5", 0) == -14
        assert res.value("l6", 0) == -11
        assert res.value("l2", 1) == 1
        assert elapsed < 1


def test_criterion_2_sweep_endpoints(verdict):
    with verdict(2, "sweep visits 1, 3/4, 1/2, 1/4, 0"):
        assert sptg.solve(fig1()).sweep == (1, F(3, 4), F(1, 2), F(1, 4), 0)


def test_criterion_3_untimed_family(verdict):
    with verdict(3, "fig3(W) values -W within the iteration bound, W=1000 under 2 s"):
        for w in FIG3_WEIGHTS:
            g = fig3(w)
            start = time.perf_counter()
            x = solve_instant(g, 0)
            res = sptg.solve(g)
            elapsed = time.perf_counter() - start
            c = constants(g)
            bound = len(g.finals) * c.n * (2 * (c.n - 1) * c.w_trans + 2 * c.w_fin + 1) + c.n
            assert iteration_bound(g) == bound
            assert x["l1"] == x["l2"] == -w
            assert res.value("l1", 0) == res.value("l2", 0) == -w
            assert x.iterations <= bound
            if w == 1000:
                assert elapsed < 2


def test_criterion_4_continuity_and_slopes(verdict):
    with verdict(4, "500 random games: continuity, rate slopes, cutpoint bound"):
        for seed in SUITE4:
            g, res = suite4_game(seed)
            bound = sptg.exp_cutpoint_bound(g)
            for loc in g.locations:
                f = res[loc.id]
                if loc.is_final:
                    continue
                if not f.is_finite_everywhere():
                    assert f in (CostFunction.constant(INF), CostFunction.constant(NEG_INF)), (seed, loc.id)
                    continue
                assert f.is_continuous(), (seed, loc.id)
                assert len(f.inner_cutpoints()) <= bound, (seed, loc.id)
                if loc.urgent:
                    continue
                for s in f.slopes_in(0, 1):
                    ok = s >= -loc.rate if loc.owner is Owner.MIN else s <= -loc.rate
                    assert ok, (seed, loc.id, s)


def test_criterion_5_grid_oracle(verdict):
    with verdict(5, f"200 random games agree with the 1/{GRID} grid oracle, under 60 s"):
        start = time.perf_counter()
        for seed in SUITE5:
            g, res = suite5_game(seed)
            table = grid_values(g, GRID)
            c = constants(g)
            tol = F(c.w_loc + c.n * c.w_trans, GRID)
            for loc in g.locations:
                if loc.is_final:
                    continue
                f = res[loc.id]
                for i in range(GRID + 1):
                    x = F(i, GRID)
                    v, o = f(x), table[loc.id][i]
                    if not is_finite(v) or not is_finite(o):
                        assert v == o, (seed, loc.id, x, v, o)
                        continue
                    assert abs(v - o) <= tol, (seed, loc.id, x, v, o)
                    if x in f.cuts:
                        assert v == o, (seed, loc.id, x, v, o)
        assert time.perf_counter() - start < 60


def test_criterion_6_bellman_residual(verdict):
    with verdict(6, "zero Bellman residual at 100 rationals per location, suites 1-5"):
        games = [(fig1(), sptg.solve(fig1()))]
        games += [(fig3(w), sptg.solve(fig3(w))) for w in FIG3_WEIGHTS]
        games += [suite4_game(s) for s in SUITE4]
        games += [suite5_game(s) for s in SUITE5]
        for k, (g, res) in enumerate(games):
            points = random_rationals(random.Random(k), 100)
            assert bellman_residuals(res.values, g, points) == [], g.name


def test_criterion_7_strategy_sandwich(verdict):
    with verdict(7, "optimal strategies against 200 random adversaries, no violations"):
        games = [fig1()] + [random_sptg(random.Random(1000 + s), max_locations=6) for s in range(50)]
        for gi, g in enumerate(games):
            res = sptg.solve(g)
            rng = random.Random(gi)
            starts = [Configuration(l.id, F(rng.randint(0, 12), 12)) for l in g.locations if not l.is_final]
            starts = [s for s in starts if is_finite(res.value(s.location, s.clock))]
            for a in range(200):
                sigma_max = random_fp_strategy(g, "max", seed=a)
                sigma_min = random_fp_strategy(g, "min", seed=a)
                for s in starts:
                    v = res.value(s.location, s.clock)
                    p = simulate(g, s, res.min_strategy, sigma_max, fast_forward=True)
                    assert p.completed(g) and play_cost(g, p) <= v, (g.name, s, a)
                    p = simulate(g, s, sigma_min, res.max_strategy, horizon=50)
                    if p.completed(g):
                        assert play_cost(g, p) >= v, (g.name, s, a)


def test_criterion_8_region_pipeline(verdict):
    with verdict(8, "fig9 value 0, fig8 rejected, k vs k+3 copies on 30 random games"):
        fig9 = load_fixture("fig9.ptg")
        assert solve_nra(fig9, F(1, 2)).value("l0", 0) == 0
        fig8 = load_fixture("fig8.ptg")
        for kappa in (None, 1, F(1, 2), F(1, 100)):
            assert check_nra(fig8, kappa).verdict == "violation"
        rng = random.Random(8)
        for _ in range(30):
            g = random_nra(rng, kappa=1)
            k_res = solve_nra(g, 1)
            k = k_res.stats.copies
            assert k_res.stats.converged and k <= copy_count(g, 1)
            more = solve_nra(g, 1, copies=k + 3, short_circuit=False)
            assert more.stats.copies == k + 3
            for loc in g.locations:
                assert k_res[loc.id] == more[loc.id], (g.name, loc.id)


def _cutoff_matches_oracle(g):
    """The first iterate below the threshold is replaced by -inf, and not earlier."""
    threshold = neg_inf_threshold(g)
    xs = list(instant_iterates(g, 0))
    brute = bounded_values(g, F(0), len(xs) + 1)
    ids = g.graph.ids
    for i, x in enumerate(xs):
        for k, loc in enumerate(ids):
            b = brute[i][loc]
            if is_finite(b) and b < threshold:
                assert x[k] == NEG_INF
            elif x[k] != NEG_INF:
                assert x[k] == b


def test_criterion_9_instant_classification(verdict, tmp_path, capsys):
    with verdict(9, "solve-instant classifies +inf and -inf, cutoff exactly at the threshold"):
        expected = {
            "unreachable": {"a": "+inf", "b": "+inf"},
            "max-escape": {"m": "+inf", "n": "+inf"},
            "negative-loop": {"a": "-inf"},
            "two-step-negative": {"a": "-inf", "b": "-inf"},
        }
        for g in (unreachable(), max_escape(), negative_loop(), two_step_negative()):
            path = tmp_path / f"{g.name}.sptg"
            path.write_text(format_game(g))
            assert cli.main(["solve-instant", str(path), "--at", "0"]) == 0
            rows = [line.split(",") for line in capsys.readouterr().out.splitlines()[1:]]
            got = {r[0]: r[2] for r in rows if r[0] in expected[g.name]}
            assert got == expected[g.name], g.name
            _cutoff_matches_oracle(g)

        # a loop of weight -1 stays finite for exactly as long as it is at or above the threshold
        loop = negative_loop()
        assert neg_inf_threshold(loop) == -1
        # the last iterate repeats the fixed point
        assert [x[0] for x in instant_iterates(loop, 0)] == [INF, 0, -1, NEG_INF, NEG_INF]

        # a loop-free game whose value equals the threshold keeps its value
        unit = Guard.closed(0, 1)
        edge = Ptg(
            (
                Location("a", Owner.MIN, urgent=True),
                Location("b", Owner.MIN, urgent=True),
                Location("f", Owner.FINAL, final_cost=AffineFn(0, -1)),
            ),
            (Transition("a", "b", unit, -2), Transition("b", "f", unit, -2)),
            1,
        )
        assert neg_inf_threshold(edge) == -5
        assert solve_instant(edge, 0)["a"] == -5
        _cutoff_matches_oracle(edge)
