"""Command-line entry point: ``ptgsolve <command> <game file> [options]``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from typing import Sequence

from . import __version__, pipeline, sptg
from .costfn import format_value
from .emit import emit_json, emit_point_csv, emit_results
from .gamefile import GameSyntaxError, format_game, parse_game
from .model import Owner, Ptg, errors, validate
from .play import Configuration, play_cost, random_fp_strategy, simulate
from .urgent import SolverAssertion, iteration_bound, solve_instant

EXIT_OK, EXIT_DIAG, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2, 64

log = logging.getLogger("ptgsolve")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an exact rational: {text!r}") from None


def _positive_rational(text: str) -> Fraction:
    v = _rational(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _start(text: str) -> tuple[str, Fraction]:
    loc, sep, clock = text.rpartition(":")
    if not sep or not loc:
        raise argparse.ArgumentTypeError(f"expected <location>:<clock>, got {text!r}")
    return loc, _rational(clock)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ptgsolve", description="Exact solver for one-clock priced timed games.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name: str, help_text: str, formats: Sequence[str]) -> argparse.ArgumentParser:
        c = sub.add_parser(name, help=help_text, description=help_text)
        c.add_argument("file", help="game file ('-' for standard input)")
        c.add_argument("--format", choices=formats, default=formats[0])
        c.add_argument("--out", help="write the output here instead of standard output")
        c.add_argument("--max-iterations", type=int, metavar="N", help="override the solver's iteration caps")
        return c

    command("solve", "value functions of a game without reset cycles", ("csv", "json", "svg"))
    c = command("solve-instant", "values at one clock value when no time may elapse", ("csv", "json"))
    c.add_argument("--at", type=_rational, required=True, metavar="CLOCK")
    command("region", "the region game", ("text", "json"))
    c = command("solve-nra", "value functions of a negative-reset-acyclic game", ("csv", "json", "svg"))
    c.add_argument("--kappa", type=_positive_rational, required=True)
    c.add_argument("--assert-nra", action="store_true", help="proceed when the condition cannot be verified")
    c = command("simulate", "play optimal strategies against a random opponent", ("text", "json"))
    c.add_argument("--from", dest="start", type=_start, required=True, metavar="LOC:CLOCK")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--random", choices=("max", "min"), default="max", help="the player that plays randomly")
    c.add_argument("--horizon", type=int, help="maximal number of transitions")
    c = command("check", "validate a game and test the reset conditions", ("text", "json"))
    c.add_argument("--kappa", type=_positive_rational, help="test the NRA condition for this value")
    return p


def _load(path: str) -> Ptg:
    if path == "-":
        text, name = sys.stdin.read(), "<stdin>"
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        name = os.path.basename(path)
    return parse_game(text, name)


def _validated(path: str) -> Ptg:
    g = _load(path)
    diags = validate(g)
    for d in diags:
        print(f"{path}: {d}", file=sys.stderr)
    if errors(diags):
        raise _Diagnostics()
    return g


class _Diagnostics(Exception):
    pass


def _write(args: argparse.Namespace, data: bytes | str) -> None:
    if isinstance(data, str):
        data = data.encode()
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.flush()


def _cmd_solve(args: argparse.Namespace) -> int:
    g = _validated(args.file)
    if g.is_sptg():
        res = sptg.solve(g, max_iterations=args.max_iterations)
    else:
        try:
            res = pipeline.reset_acyclic_solve(g, max_iterations=args.max_iterations)
        except pipeline.ResetCycleError as e:
            print(f"{args.file}: {e}; try solve-nra", file=sys.stderr)
            return EXIT_DIAG
    _write(args, emit_results(res, args.format))
    return EXIT_OK


def _cmd_solve_instant(args: argparse.Namespace) -> int:
    g = _validated(args.file)
    if g.has_resets:
        print(f"{args.file}: instant games cannot contain resets", file=sys.stderr)
        return EXIT_DIAG
    if not 0 <= args.at <= g.clock_bound:
        print(f"{args.file}: clock value {args.at} outside [0, {g.clock_bound}]", file=sys.stderr)
        return EXIT_DIAG
    x = solve_instant(g, args.at, force_urgent=True, max_iterations=args.max_iterations)
    if args.format == "csv":
        _write(args, emit_point_csv(args.at, x.values))
    else:
        doc = {
            "at": str(args.at),
            "values": {loc.id: format_value(x.values[loc.id]) for loc in g.locations},
            "iterations": x.iterations,
            "iteration_bound": iteration_bound(g),
        }
        _write(args, emit_json(doc))
    return EXIT_OK


def _cmd_region(args: argparse.Namespace) -> int:
    g = _validated(args.file)
    rp = pipeline.region_ptg(g)
    if args.format == "text":
        _write(args, format_game(rp.game))
    else:
        doc = {
            "regions": [str(r) if r.lo != r.hi else f"{{{r.lo}}}" for r in rp.regions],
            "locations": [
                {"id": loc.id, "location": rp.key[loc.id][0], "region": rp.key[loc.id][1], "owner": loc.owner.value}
                for loc in rp.game.locations
            ],
            "transitions": [
                {
                    "source": t.source,
                    "target": t.target,
                    "guard": str(t.guard),
                    "weight": t.weight,
                    "reset": t.reset,
                    "origin": list(rp.origin[k]),
                    "wait": rp.is_wait(k),
                }
                for k, t in enumerate(rp.game.transitions)
            ],
        }
        _write(args, emit_json(doc))
    return EXIT_OK


def _cmd_solve_nra(args: argparse.Namespace) -> int:
    g = _validated(args.file)
    try:
        res = pipeline.solve_nra(g, args.kappa, assert_nra=args.assert_nra, max_iterations=args.max_iterations)
    except pipeline.NotNraError as e:
        print(f"{args.file}: {e}", file=sys.stderr)
        if e.report.verdict == "inconclusive":
            print("use --assert-nra to proceed anyway", file=sys.stderr)
        return EXIT_DIAG
    if not res.stats.converged:
        print(f"{args.file}: warning: copies did not reach a fixed point", file=sys.stderr)
    _write(args, emit_results(res, args.format))
    return EXIT_OK


def _cmd_simulate(args: argparse.Namespace) -> int:
    g = _validated(args.file)
    if not g.is_sptg():
        print(f"{args.file}: simulate needs a simple game (guards [0,r], no resets)", file=sys.stderr)
        return EXIT_DIAG
    loc, clock = args.start
    try:
        g.location(loc)
    except KeyError as e:
        print(f"{args.file}: {e.args[0]}", file=sys.stderr)
        return EXIT_DIAG
    res = sptg.solve(g, max_iterations=args.max_iterations)
    if not 0 <= clock <= res.values[loc].hi:
        print(f"{args.file}: clock value {clock} outside the game's domain", file=sys.stderr)
        return EXIT_DIAG
    if args.random == "max":
        sigma_min, sigma_max = res.min_strategy, random_fp_strategy(g, Owner.MAX, args.seed)
    else:
        sigma_min, sigma_max = random_fp_strategy(g, Owner.MIN, args.seed), res.max_strategy
    play = simulate(g, Configuration(loc, clock), sigma_min, sigma_max, args.horizon)
    cost = play_cost(g, play)
    value = res.value(loc, clock)
    if args.format == "text":
        lines = [f"start {play.start}"]
        for s in play.steps:
            t = g.transitions[s.transition]
            lines.append(f"  wait {s.delay}, take #{s.transition} {t.source} -> {t.target}, cost {s.cost} -> {s.target}")
        lines.append(f"price {format_value(cost)} (value {format_value(value)}, {play.transitions} transitions)")
        _write(args, "\n".join(lines) + "\n")
    else:
        doc = {
            "start": {"location": loc, "clock": str(clock)},
            "random_player": args.random,
            "seed": args.seed,
            "steps": [
                {
                    "delay": str(s.delay),
                    "transition": s.transition,
                    "cost": str(s.cost),
                    "location": s.target.location,
                    "clock": str(s.target.clock),
                }
                for s in play.steps
            ],
            "completed": play.completed(g),
            "price": format_value(cost),
            "value": format_value(value),
        }
        _write(args, emit_json(doc))
    return EXIT_OK


def _cmd_check(args: argparse.Namespace) -> int:
    g = _load(args.file)
    diags = validate(g)
    report: dict = {
        "diagnostics": [str(d) for d in diags],
        "simple": False,
        "resets": g.has_resets,
    }
    status = EXIT_DIAG if errors(diags) else EXIT_OK
    if status == EXIT_OK:
        c = g.constants()
        report["simple"] = g.is_sptg()
        report["constants"] = {"W_T": c.w_trans, "W_L": str(c.w_loc), "W_fin": str(c.w_fin), "n": c.n}
        rp = pipeline.region_ptg(g)
        report["regions"] = len(rp.regions)
        cyc = pipeline.reset_cycle(rp)
        report["reset_cycle"] = cyc
        if cyc is not None:
            nra = pipeline.check_nra(rp, args.kappa)
            report["nra"] = {
                "verdict": nra.verdict,
                "kappa": None if nra.kappa is None else str(nra.kappa),
                "kappa_sup": None if nra.kappa_sup is None else format_value(nra.kappa_sup),
                "cycles": nra.cycles,
                "witness": None
                if nra.witness is None
                else {"cycle": list(nra.witness.nodes), "low": str(nra.witness.low), "high": str(nra.witness.high)},
                "note": nra.note,
            }
            if nra.verdict == "violation":
                status = EXIT_DIAG
    if args.format == "json":
        _write(args, json.dumps(report, indent=2, sort_keys=True) + "\n")
    else:
        lines = [f"{args.file}: {d}" for d in report["diagnostics"]]
        if status == EXIT_OK or "constants" in report:
            kind = "simple game" if report["simple"] else "general game"
            lines.append(f"{kind}; {report['regions']} regions; constants {report['constants']}")
            if report["reset_cycle"] is None:
                lines.append("no reset lies on a cycle" if g.has_resets else "no resets")
            else:
                n = report["nra"]
                lines.append("reset on a cycle: " + " -> ".join(report["reset_cycle"]))
                scope = "some kappa" if n["kappa"] is None else f"kappa = {n['kappa']}"
                lines.append(f"NRA check for {scope}: {n['verdict']} ({n['cycles']} cycles)")
                if n["witness"]:
                    w = n["witness"]
                    lines.append(f"  cycle {' -> '.join(w['cycle'])} with prices in [{w['low']}, {w['high']}]")
                if n["kappa_sup"] is not None and n["verdict"] != "violation":
                    lines.append(f"  holds for every kappa < {n['kappa_sup']}")
                if n["note"]:
                    lines.append(f"  {n['note']}")
        _write(args, "\n".join(lines) + "\n")
    return status


COMMANDS = {
    "solve": _cmd_solve,
    "solve-instant": _cmd_solve_instant,
    "region": _cmd_region,
    "solve-nra": _cmd_solve_nra,
    "simulate": _cmd_simulate,
    "check": _cmd_check,
}


def _configure_logging() -> None:
    level = os.environ.get("SPTG_LOG", "").lower()
    if level in ("debug", "info"):
        logging.basicConfig(level=getattr(logging, level.upper()), format="%(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return COMMANDS[args.command](args)
    except GameSyntaxError as e:
        print(f"{args.file}:{e.line}:{e.column}: {e.message}", file=sys.stderr)
        return EXIT_DIAG
    except _Diagnostics:
        return EXIT_DIAG
    except OSError as e:
        print(f"ptgsolve: {e}", file=sys.stderr)
        return EXIT_DIAG
    except SolverAssertion as e:
        print(f"ptgsolve: solver assertion failed: {e}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
