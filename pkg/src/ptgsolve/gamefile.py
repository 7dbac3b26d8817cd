"""Line-based text format for games (see docs/format.md)."""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from .costfn import AffineFn
from .model import Guard, Location, Owner, Ptg, Transition

_RAT = r"[+-]?\d+(?:/\d+)?"
_ID = r"[A-Za-z_][^\s=#]*"
_GUARD = re.compile(rf"([\[(])\s*({_RAT})\s*,\s*({_RAT})\s*([\])])$")
_COST = re.compile(rf"({_RAT})\*x([+-])({_RAT})$|({_RAT})$")


@dataclass
class GameSyntaxError(ValueError):
    line: int
    column: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}: {self.message}"


def _rational(text: str, line: int, col: int, what: str) -> Fraction:
    if not re.fullmatch(_RAT, text):
        raise GameSyntaxError(line, col, f"expected {what} as an exact rational, got {text!r}")
    try:
        return Fraction(text)
    except ZeroDivisionError:
        raise GameSyntaxError(line, col, f"zero denominator in {text!r}") from None


def _integer(text: str, line: int, col: int, what: str) -> int:
    if not re.fullmatch(r"[+-]?\d+", text):
        raise GameSyntaxError(line, col, f"expected integer {what}, got {text!r}")
    return int(text)


def _tokens(raw: str) -> list[tuple[int, str]]:
    return [(m.start() + 1, m.group()) for m in re.finditer(r"\S+", raw)]


def _options(toks: list[tuple[int, str]], ln: int) -> tuple[dict[str, tuple[int, str]], set[str]]:
    keyed: dict[str, tuple[int, str]] = {}
    flags: set[str] = set()
    for col, tok in toks:
        if "=" in tok:
            key, _, val = tok.partition("=")
            if key in keyed:
                raise GameSyntaxError(ln, col, f"repeated option {key!r}")
            keyed[key] = (col + len(key) + 1, val)
        else:
            flags.add(tok)
    return keyed, flags


def parse_game(text: str, name: str = "") -> Ptg:
    locations: list[Location] = []
    transitions: list[Transition] = []
    bound: Fraction | None = None
    seen: dict[str, int] = {}
    pending: list[tuple[int, int, str, str]] = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        raw = raw.split("#", 1)[0]
        toks = _tokens(raw)
        if not toks:
            continue
        col0, kw = toks[0]
        if kw == "clock_bound":
            if len(toks) != 2:
                raise GameSyntaxError(ln, col0, "expected 'clock_bound <M>'")
            if bound is not None:
                raise GameSyntaxError(ln, col0, "clock_bound given twice")
            bound = Fraction(_integer(toks[1][1], ln, toks[1][0], "clock bound"))
        elif kw == "location":
            if len(toks) < 2 or not re.fullmatch(_ID, toks[1][1]):
                raise GameSyntaxError(ln, col0 + 9, "expected a location identifier")
            lid = toks[1][1]
            if lid in seen:
                raise GameSyntaxError(ln, toks[1][0], f"duplicate location {lid!r} (first on line {seen[lid]})")
            seen[lid] = ln
            opts, flags = _options(toks[2:], ln)
            unknown = flags - {"urgent"}
            if unknown:
                raise GameSyntaxError(ln, 1, f"unknown flag {sorted(unknown)[0]!r}")
            extra = set(opts) - {"owner", "rate", "final_cost"}
            if extra:
                raise GameSyntaxError(ln, opts[sorted(extra)[0]][0], f"unknown option {sorted(extra)[0]!r}")
            if "owner" not in opts:
                raise GameSyntaxError(ln, len(raw.rstrip()) + 1, "expected owner=(min|max|final)")
            col, ov = opts["owner"]
            if ov not in ("min", "max", "final"):
                raise GameSyntaxError(ln, col, f"expected owner min, max or final, got {ov!r}")
            owner = Owner(ov)
            rate = 0
            if "rate" in opts:
                rate = _integer(opts["rate"][1], ln, opts["rate"][0], "rate")
            cost = None
            if "final_cost" in opts:
                col, cv = opts["final_cost"]
                m = _COST.fullmatch(cv)
                if not m:
                    raise GameSyntaxError(ln, col, f"expected final_cost=<a>*x+<b>, got {cv!r}")
                if m.group(4) is not None:
                    cost = AffineFn(0, _rational(m.group(4), ln, col, "final cost"))
                else:
                    a = _rational(m.group(1), ln, col, "slope")
                    b = _rational(m.group(3), ln, col, "offset")
                    cost = AffineFn(a, b if m.group(2) == "+" else -b)
            if owner is Owner.FINAL:
                if "urgent" in flags:
                    raise GameSyntaxError(ln, 1, "final locations cannot be urgent")
                if cost is None:
                    raise GameSyntaxError(ln, len(raw.rstrip()) + 1, "final location needs final_cost=<a>*x+<b>")
            elif cost is not None:
                raise GameSyntaxError(ln, opts["final_cost"][0], "only final locations have a final cost")
            locations.append(Location(lid, owner, rate, "urgent" in flags, cost))
        elif kw == "transition":
            if len(toks) < 4 or toks[2][1] != "->":
                raise GameSyntaxError(ln, col0, "expected 'transition <src> -> <dst> guard=... weight=<int>'")
            src, dst = toks[1], toks[3]
            opts, flags = _options(toks[4:], ln)
            unknown = flags - {"reset"}
            if unknown:
                raise GameSyntaxError(ln, 1, f"unknown flag {sorted(unknown)[0]!r}")
            extra = set(opts) - {"guard", "weight"}
            if extra:
                raise GameSyntaxError(ln, opts[sorted(extra)[0]][0], f"unknown option {sorted(extra)[0]!r}")
            if "guard" not in opts:
                raise GameSyntaxError(ln, len(raw.rstrip()) + 1, "expected guard=[lo,hi]")
            col, gv = opts["guard"]
            m = _GUARD.fullmatch(gv)
            if not m:
                raise GameSyntaxError(ln, col, f"expected guard like [0,1] or (0,1], got {gv!r}")
            guard = Guard(
                _rational(m.group(2), ln, col, "guard bound"),
                _rational(m.group(3), ln, col, "guard bound"),
                m.group(1) == "[",
                m.group(4) == "]",
            )
            weight = 0
            if "weight" in opts:
                weight = _integer(opts["weight"][1], ln, opts["weight"][0], "weight")
            pending.append((ln, src[0], src[1], "src"))
            pending.append((ln, dst[0], dst[1], "dst"))
            transitions.append(Transition(src[1], dst[1], guard, weight, "reset" in flags))
        else:
            raise GameSyntaxError(ln, col0, f"expected 'location', 'transition' or 'clock_bound', got {kw!r}")
    if not locations:
        raise GameSyntaxError(1, 1, "no locations")
    for ln, col, lid, _ in pending:
        if lid not in seen:
            raise GameSyntaxError(ln, col, f"unknown location {lid!r}")
    return Ptg(tuple(locations), tuple(transitions), bound if bound is not None else Fraction(1), name)


def _affine_text(f: AffineFn) -> str:
    sign = "+" if f.intercept >= 0 else "-"
    return f"{f.slope}*x{sign}{abs(f.intercept)}"


def format_game(g: Ptg) -> str:
    lines = [f"clock_bound {g.clock_bound}"]
    for loc in g.locations:
        parts = ["location", loc.id, f"owner={loc.owner.value}"]
        if not loc.is_final:
            parts.append(f"rate={loc.rate}")
        if loc.urgent:
            parts.append("urgent")
        if loc.final_cost is not None:
            parts.append(f"final_cost={_affine_text(loc.final_cost)}")
        lines.append(" ".join(parts))
    for t in g.transitions:
        parts = ["transition", t.source, "->", t.target, f"guard={t.guard}"]
        if t.reset:
            parts.append("reset")
        parts.append(f"weight={t.weight}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def fixture_names() -> list[str]:
    return sorted(p.name for p in resources.files("ptgsolve.fixtures").iterdir() if p.name.endswith("tg"))


def load_fixture(name: str) -> Ptg:
    """One of the bundled example games, e.g. ``"fig1.sptg"``."""
    text = resources.files("ptgsolve.fixtures").joinpath(name).read_text()
    return parse_game(text, name)
