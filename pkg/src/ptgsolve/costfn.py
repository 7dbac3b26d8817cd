"""Exact piecewise-affine cost functions over a closed rational interval.

Values are ``Fraction`` instances or one of the two float infinities
(``INF``/``NEG_INF``).  A :class:`CostFunction` stores its cutpoints, one
explicit value per cutpoint and one piece per open interval between
consecutive cutpoints, so jumps at cutpoints are representable.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

INF = math.inf
NEG_INF = -math.inf

ExtValue = Union[Fraction, float]
Rational = Union[Fraction, int]


def is_finite(v: ExtValue) -> bool:
    return not (isinstance(v, float) and math.isinf(v))


def as_fraction(x: Rational | str) -> Fraction:
    """Coerce ints, Fractions and strings such as ``"-19/2"`` to ``Fraction``."""
    if isinstance(x, float):
        raise TypeError(f"refusing float {x!r}: only exact rationals are accepted")
    return Fraction(x)


def format_value(v: ExtValue) -> str:
    """Render an extended value as an exact string (``-19/2``, ``+inf``)."""
    if v == INF:
        return "+inf"
    if v == NEG_INF:
        return "-inf"
    return str(Fraction(v))


def parse_value(text: str) -> ExtValue:
    text = text.strip()
    if text in ("+inf", "inf"):
        return INF
    if text == "-inf":
        return NEG_INF
    return Fraction(text)


@dataclass(frozen=True)
class AffineFn:
    """``x -> slope * x + intercept``."""

    slope: Fraction
    intercept: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "slope", as_fraction(self.slope))
        object.__setattr__(self, "intercept", as_fraction(self.intercept))

    def __call__(self, x: Rational) -> Fraction:
        return self.slope * x + self.intercept

    @classmethod
    def constant(cls, c: Rational) -> AffineFn:
        return cls(Fraction(0), as_fraction(c))

    @classmethod
    def through(cls, x0: Rational, y0: Rational, x1: Rational, y1: Rational) -> AffineFn:
        if x0 == x1:
            raise ValueError("need two distinct abscissae")
        slope = Fraction(y1 - y0) / (x1 - x0)
        return cls(slope, y0 - slope * x0)

    def shifted(self, k: Rational) -> AffineFn:
        return AffineFn(self.slope, self.intercept + k)

    def reparametrized(self, offset: Rational, scale: Rational) -> AffineFn:
        """The function ``y -> self(offset + scale * y)``."""
        return AffineFn(self.slope * scale, self(offset))

    def crossing(self, other: AffineFn) -> Fraction | None:
        """Abscissa where the two lines meet, or None when parallel."""
        ds = self.slope - other.slope
        if ds == 0:
            return None
        return (other.intercept - self.intercept) / ds

    def __str__(self) -> str:
        return f"{self.slope}*x{'+' if self.intercept >= 0 else '-'}{abs(self.intercept)}"


Piece = Union[AffineFn, float]


def _piece_value(p: Piece, x: Rational) -> ExtValue:
    return p(x) if isinstance(p, AffineFn) else p


def _pick(values: Sequence[ExtValue], mode: str) -> ExtValue:
    return min(values) if mode == "min" else max(values)


@dataclass(frozen=True)
class CostFunction:
    """Piecewise-affine function with explicit values at its cutpoints.

    ``pieces[i]`` lives on the open interval ``(cuts[i], cuts[i+1])`` and is
    either an :class:`AffineFn` or a constant infinity.
    """

    cuts: tuple[Fraction, ...]
    points: tuple[ExtValue, ...]
    pieces: tuple[Piece, ...]

    def __post_init__(self) -> None:
        cuts = tuple(as_fraction(c) for c in self.cuts)
        object.__setattr__(self, "cuts", cuts)
        object.__setattr__(
            self, "points", tuple(p if not is_finite(p) else Fraction(p) for p in self.points)
        )
        object.__setattr__(self, "pieces", tuple(self.pieces))
        if not cuts:
            raise ValueError("a cost function needs at least one cutpoint")
        if len(self.points) != len(cuts) or len(self.pieces) != len(cuts) - 1:
            raise ValueError("inconsistent cutpoint/piece counts")
        if any(a >= b for a, b in zip(cuts, cuts[1:])):
            raise ValueError("cutpoints must be strictly increasing")
        for p in self.pieces:
            if not isinstance(p, AffineFn) and p not in (INF, NEG_INF):
                raise ValueError(f"invalid piece {p!r}")

    # construction

    @classmethod
    def affine(cls, fn: AffineFn, lo: Rational = 0, hi: Rational = 1) -> CostFunction:
        lo, hi = as_fraction(lo), as_fraction(hi)
        if lo == hi:
            return cls.point(fn(lo), lo)
        return cls((lo, hi), (fn(lo), fn(hi)), (fn,))

    @classmethod
    def constant(cls, v: ExtValue, lo: Rational = 0, hi: Rational = 1) -> CostFunction:
        if is_finite(v):
            return cls.affine(AffineFn.constant(v), lo, hi)
        lo, hi = as_fraction(lo), as_fraction(hi)
        if lo == hi:
            return cls.point(v, lo)
        return cls((lo, hi), (v, v), (v,))

    @classmethod
    def point(cls, v: ExtValue, at: Rational) -> CostFunction:
        return cls((as_fraction(at),), (v,), ())

    @classmethod
    def from_values(cls, cuts: Sequence[Rational], values: Sequence[Rational]) -> CostFunction:
        """Continuous function interpolating finite ``values`` at ``cuts``."""
        cuts = [as_fraction(c) for c in cuts]
        values = [as_fraction(v) for v in values]
        pieces = [
            AffineFn.through(cuts[i], values[i], cuts[i + 1], values[i + 1])
            for i in range(len(cuts) - 1)
        ]
        return cls(tuple(cuts), tuple(values), tuple(pieces)).canonical()

    # queries

    @property
    def lo(self) -> Fraction:
        return self.cuts[0]

    @property
    def hi(self) -> Fraction:
        return self.cuts[-1]

    def _locate(self, x: Rational) -> tuple[int, bool]:
        """(index, on_cut): cut index if ``x`` is a cutpoint, else piece index."""
        if x < self.lo or x > self.hi:
            raise ValueError(f"{x} outside domain [{self.lo}, {self.hi}]")
        i = bisect_left(self.cuts, x)
        if i < len(self.cuts) and self.cuts[i] == x:
            return i, True
        return i - 1, False

    def __call__(self, x: Rational) -> ExtValue:
        i, on_cut = self._locate(x)
        if on_cut:
            return self.points[i]
        return _piece_value(self.pieces[i], x)

    evaluate = __call__

    def piece_at(self, x: Rational, side: str = "right") -> Piece:
        """Piece governing ``x`` from the given side (``x`` may be a cutpoint)."""
        i, on_cut = self._locate(x)
        if on_cut:
            i = i if side == "right" else i - 1
            if not 0 <= i < len(self.pieces):
                raise ValueError(f"no piece on the {side} of {x}")
        return self.pieces[i]

    def limit(self, x: Rational, side: str) -> ExtValue:
        return _piece_value(self.piece_at(x, side), x)

    def is_finite_everywhere(self) -> bool:
        return all(is_finite(p) for p in self.points) and all(
            isinstance(p, AffineFn) for p in self.pieces
        )

    def is_continuous(self) -> bool:
        for i, c in enumerate(self.cuts):
            if i > 0 and _piece_value(self.pieces[i - 1], c) != self.points[i]:
                return False
            if i < len(self.pieces) and _piece_value(self.pieces[i], c) != self.points[i]:
                return False
        return True

    def slopes_in(self, a: Rational, b: Rational) -> list[Fraction]:
        """Slopes of the pieces meeting the open interval ``(a, b)``, left to right."""
        if a > b or a < self.lo or b > self.hi:
            raise ValueError(f"[{a}, {b}] not inside [{self.lo}, {self.hi}]")
        out: list[Fraction] = []
        for i, p in enumerate(self.pieces):
            if self.cuts[i + 1] <= a or self.cuts[i] >= b:
                continue
            if not isinstance(p, AffineFn):
                raise ValueError(f"infinite piece on ({self.cuts[i]}, {self.cuts[i + 1]})")
            out.append(p.slope)
        return out

    def min_value(self) -> ExtValue:
        """Infimum over the domain (pieces are affine, so cut values suffice)."""
        vals: list[ExtValue] = list(self.points)
        for i, p in enumerate(self.pieces):
            if isinstance(p, AffineFn):
                vals += [p(self.cuts[i]), p(self.cuts[i + 1])]
            else:
                vals.append(p)
        return min(vals)

    def max_value(self) -> ExtValue:
        vals: list[ExtValue] = list(self.points)
        for i, p in enumerate(self.pieces):
            if isinstance(p, AffineFn):
                vals += [p(self.cuts[i]), p(self.cuts[i + 1])]
            else:
                vals.append(p)
        return max(vals)

    def inner_cutpoints(self) -> tuple[Fraction, ...]:
        return self.cuts[1:-1]

    # transformations

    def canonical(self) -> CostFunction:
        """Drop cutpoints whose neighbours are the same piece and agree with it."""
        cuts = [self.cuts[0]]
        points = [self.points[0]]
        pieces: list[Piece] = []
        for i, p in enumerate(self.pieces):
            c, v = self.cuts[i + 1], self.points[i + 1]
            if pieces and pieces[-1] == p and _piece_value(p, cuts[-1]) == points[-1]:
                cuts[-1], points[-1] = c, v
            else:
                pieces.append(p)
                cuts.append(c)
                points.append(v)
        return CostFunction(tuple(cuts), tuple(points), tuple(pieces))

    def restrict(self, a: Rational, b: Rational) -> CostFunction:
        a, b = as_fraction(a), as_fraction(b)
        if a > b or a < self.lo or b > self.hi:
            raise ValueError(f"[{a}, {b}] not inside [{self.lo}, {self.hi}]")
        if a == b:
            return CostFunction.point(self(a), a)
        cuts = [a] + [c for c in self.cuts if a < c < b] + [b]
        points = [self(c) for c in cuts]
        pieces = [self.piece_at(cuts[i], "right") for i in range(len(cuts) - 1)]
        return CostFunction(tuple(cuts), tuple(points), tuple(pieces))

    def reparametrized(self, offset: Rational, scale: Rational) -> CostFunction:
        """The function ``y -> self(offset + scale * y)`` for ``scale > 0``."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        cuts = tuple((c - offset) / Fraction(scale) for c in self.cuts)
        pieces = tuple(
            p.reparametrized(offset, scale) if isinstance(p, AffineFn) else p for p in self.pieces
        )
        return CostFunction(cuts, self.points, pieces)

    def with_point(self, x: Rational, v: ExtValue) -> CostFunction:
        """Copy with the value at cutpoint ``x`` replaced."""
        i, on_cut = self._locate(x)
        if not on_cut:
            raise ValueError(f"{x} is not a cutpoint")
        points = list(self.points)
        points[i] = v
        return CostFunction(self.cuts, tuple(points), self.pieces)

    def __str__(self) -> str:
        parts = []
        for i, c in enumerate(self.cuts):
            parts.append(f"{c}:{format_value(self.points[i])}")
            if i < len(self.pieces):
                p = self.pieces[i]
                parts.append(f"<{p}>" if isinstance(p, AffineFn) else f"<{format_value(p)}>")
        return " ".join(parts)


def concat_left(f: CostFunction, g: CostFunction) -> CostFunction:
    """``f ⊙ g``: equal to ``f`` on the domain of ``f`` and to ``g`` elsewhere.

    The two domains must meet in exactly one point.
    """
    if f.hi == g.lo:
        left, right, shared_from = f, g, "left"
    elif g.hi == f.lo:
        left, right, shared_from = g, f, "right"
    else:
        raise ValueError(
            f"domains [{f.lo}, {f.hi}] and [{g.lo}, {g.hi}] do not meet in a single point"
        )
    # the value at the junction comes from f
    junction = f.points[-1] if shared_from == "left" else f.points[0]
    cuts = left.cuts + right.cuts[1:]
    points = left.points[:-1] + (junction,) + right.points[1:]
    return CostFunction(cuts, points, left.pieces + right.pieces).canonical()


def _breakpoints(fs: Sequence[CostFunction]) -> list[Fraction]:
    cuts = sorted(set().union(*(f.cuts for f in fs)))
    extra: set[Fraction] = set()
    for a, b in zip(cuts, cuts[1:]):
        mid = (a + b) / 2
        lines = [f.piece_at(mid) for f in fs]
        finite = [p for p in lines if isinstance(p, AffineFn)]
        for i, p in enumerate(finite):
            for q in finite[i + 1:]:
                x = p.crossing(q)
                if x is not None and a < x < b:
                    extra.add(x)
    return sorted(set(cuts) | extra)


def pointwise_extremum(fs: Sequence[CostFunction], mode: str) -> CostFunction:
    """Pointwise min or max of functions sharing one domain, split at crossings."""
    if mode not in ("min", "max"):
        raise ValueError(f"mode must be 'min' or 'max', not {mode!r}")
    if not fs:
        raise ValueError("empty list of cost functions")
    lo, hi = fs[0].lo, fs[0].hi
    if any(f.lo != lo or f.hi != hi for f in fs):
        raise ValueError("all functions must share the same domain")
    cuts = _breakpoints(fs)
    points = [_pick([f(c) for f in fs], mode) for c in cuts]
    pieces: list[Piece] = []
    for a, b in zip(cuts, cuts[1:]):
        mid = (a + b) / 2
        best = None
        best_val: ExtValue = 0
        for f in fs:
            p = f.piece_at(mid)
            v = _piece_value(p, mid)
            if best is None or (v < best_val if mode == "min" else v > best_val):
                best, best_val = p, v
        pieces.append(best)
    return CostFunction(tuple(cuts), tuple(points), tuple(pieces)).canonical()


def glue(parts: Iterable[CostFunction]) -> CostFunction:
    """Join abutting functions left to right; at shared endpoints the later
    singleton (single-cut) part wins, otherwise the left part's value is kept."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to glue")
    cuts = list(parts[0].cuts)
    points = list(parts[0].points)
    pieces = list(parts[0].pieces)
    for p in parts[1:]:
        if p.lo != cuts[-1]:
            raise ValueError(f"gap between {cuts[-1]} and {p.lo}")
        if len(p.cuts) == 1:
            points[-1] = p.points[0]
            continue
        cuts += p.cuts[1:]
        points += p.points[1:]
        pieces += p.pieces
    return CostFunction(tuple(cuts), tuple(points), tuple(pieces)).canonical()
