"""CSV, JSON and SVG renderings of solved games.

Numbers are always written as exact fractions (``-19/2``, ``+inf``).
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from typing import Any, Mapping, Union
from xml.sax.saxutils import escape

from . import __version__
from .costfn import AffineFn, CostFunction, ExtValue, format_value, is_finite
from .model import Ptg
from .pipeline import PipelineResult
from .sptg import ValueResult
from .strategy import FpStrategy, LocationPlan, Move

Result = Union[ValueResult, PipelineResult]

CSV_HEADER = ("location", "cutpoint", "value", "slope_right")
SCHEMA_ID = "ptgsolve-result/1"


def reported_values(res: Result) -> dict[str, CostFunction]:
    """Value functions of the non-final locations, in game order."""
    g = res.game
    return {loc.id: res.values[loc.id] for loc in g.locations if not loc.is_final and loc.id in res.values}


def csv_rows(values: Mapping[str, CostFunction]) -> list[tuple[str, str, str, str]]:
    rows = []
    for loc, f in values.items():
        for i, c in enumerate(f.cuts):
            slope = ""
            if i < len(f.pieces) and isinstance(f.pieces[i], AffineFn):
                slope = str(f.pieces[i].slope)
            rows.append((loc, str(c), format_value(f.points[i]), slope))
    return rows


def emit_csv(values: Mapping[str, CostFunction]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(csv_rows(values))
    return buf.getvalue()


def emit_point_csv(nu: Fraction, values: Mapping[str, ExtValue]) -> str:
    """Values at a single clock value, in the same columns."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows((loc, str(nu), format_value(v), "") for loc, v in values.items())
    return buf.getvalue()


def function_json(f: CostFunction) -> dict[str, Any]:
    pieces = []
    for i, p in enumerate(f.pieces):
        item: dict[str, Any] = {"from": str(f.cuts[i]), "to": str(f.cuts[i + 1])}
        if isinstance(p, AffineFn):
            item.update(slope=str(p.slope), intercept=str(p.intercept))
        else:
            item["value"] = format_value(p)
        pieces.append(item)
    return {
        "cutpoints": [{"x": str(c), "value": format_value(v)} for c, v in zip(f.cuts, f.points)],
        "pieces": pieces,
    }


def _move_json(g: Ptg, m: Move | None) -> dict[str, Any] | None:
    if m is None:
        return None
    t = g.transitions[m.transition]
    return {
        "transition": m.transition,
        "target": t.target,
        "wait_until": None if m.wait_until is None else str(m.wait_until),
    }


def plan_json(g: Ptg, plan: LocationPlan) -> list[dict[str, Any]]:
    out = []
    for i, p in enumerate(plan.points):
        out.append({"at": str(p), "move": _move_json(g, plan.at_points[i])})
        if i < len(plan.on_intervals):
            out.append(
                {"from": str(p), "to": str(plan.points[i + 1]), "move": _move_json(g, plan.on_intervals[i])}
            )
    return out


def strategy_json(g: Ptg, s: FpStrategy) -> dict[str, Any]:
    return {loc: plan_json(g, plan) for loc, plan in s.plans.items()}


def result_json(res: Result) -> dict[str, Any]:
    g = res.game
    values = reported_values(res)
    any_f = next(iter(res.values.values()), None)
    doc: dict[str, Any] = {
        "schema": SCHEMA_ID,
        "solver_version": __version__,
        "game": g.name,
        "domain": None if any_f is None else [str(any_f.lo), str(any_f.hi)],
        "values": {
            loc: {"owner": g.location(loc).owner.value, **function_json(f)} for loc, f in values.items()
        },
    }
    if isinstance(res, ValueResult):
        st = res.stats
        doc["strategies"] = {
            "max": strategy_json(g, res.max_strategy),
            "min": {
                "first": strategy_json(g, res.min_strategy.first),
                "second": strategy_json(g, res.min_strategy.second),
                "threshold": res.min_strategy.threshold,
            },
        }
        doc["stats"] = {
            "kind": "simple",
            "sweep": [str(r) for r in res.sweep],
            "windows": st.windows,
            "window_bound": st.window_bound,
            "instant_calls": st.instant_calls,
            "iterations": st.iterations,
            "cutpoints": {loc: len(f.cuts) for loc, f in values.items()},
            "cutpoint_bound": st.cutpoint_bound,
        }
    else:
        st = res.stats
        doc["strategies"] = None
        doc["stats"] = {
            "kind": "regions",
            "instant_solves": st.instant_solves,
            "window_solves": st.window_solves,
            "copies": st.copies,
            "converged": st.converged,
            "cutpoints": {loc: len(f.cuts) for loc, f in values.items()},
        }
    return doc


def emit_json(doc: Mapping[str, Any]) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# SVG

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")
_W, _H, _PAD = 320, 200, 40


def _runs(f: CostFunction) -> list[list[tuple[float, float]]]:
    """Continuous finite stretches of ``f`` as float polylines."""
    runs: list[list[tuple[float, float]]] = []
    cur: list[tuple[float, float]] = []
    for i, p in enumerate(f.pieces):
        a, b = f.cuts[i], f.cuts[i + 1]
        if not isinstance(p, AffineFn):
            if cur:
                runs.append(cur)
            cur = []
            continue
        start = (float(a), float(p(a)))
        if not cur or cur[-1] != start:
            if cur:
                runs.append(cur)
            cur = [start]
        cur.append((float(b), float(p(b))))
    if cur:
        runs.append(cur)
    if not f.pieces and is_finite(f.points[0]):
        runs.append([(float(f.cuts[0]), float(f.points[0]))])
    return runs


def _panel(loc: str, f: CostFunction, colour: str, ox: int, oy: int) -> list[str]:
    loc = escape(loc, {'"': "&quot;"})
    finite = [v for v in f.points if is_finite(v)]
    lo_y = min(finite) if finite else 0
    hi_y = max(finite) if finite else 0
    x0, x1 = float(f.lo), float(f.hi)
    y0, y1 = float(lo_y), float(hi_y)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1
    iw, ih = _W - 2 * _PAD, _H - 2 * _PAD

    def sx(x: float) -> float:
        return round(ox + _PAD + (x - x0) / (x1 - x0) * iw, 2)

    def sy(y: float) -> float:
        return round(oy + _H - _PAD - (y - y0) / (y1 - y0) * ih, 2)

    out = [
        f'<g class="panel" data-location="{loc}">',
        f'<text x="{ox + _W / 2}" y="{oy + 16}" text-anchor="middle" font-weight="bold">{loc}</text>',
        f'<line x1="{sx(x0)}" y1="{oy + _H - _PAD}" x2="{sx(x1)}" y2="{oy + _H - _PAD}" stroke="#444"/>',
        f'<line x1="{ox + _PAD}" y1="{sy(y0)}" x2="{ox + _PAD}" y2="{sy(y1)}" stroke="#444"/>',
        f'<text x="{ox + _PAD - 4}" y="{sy(float(lo_y))}" text-anchor="end" font-size="10">{format_value(lo_y)}</text>',
        f'<text x="{ox + _PAD - 4}" y="{sy(float(hi_y)) + 8}" text-anchor="end" font-size="10">{format_value(hi_y)}</text>',
    ]
    for run in _runs(f):
        pts = " ".join(f"{sx(x)},{sy(y)}" for x, y in run)
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{pts}"/>')
    for c, v in zip(f.cuts, f.points):
        out.append(
            f'<text x="{sx(float(c))}" y="{oy + _H - _PAD + 14}" text-anchor="middle" font-size="10">{c}</text>'
        )
        if is_finite(v):
            out.append(
                f'<circle cx="{sx(float(c))}" cy="{sy(float(v))}" r="3" fill="{colour}">'
                f"<title>({c}, {format_value(v)})</title></circle>"
            )
    if not f.is_finite_everywhere():
        labels = sorted({format_value(p) for p in f.pieces if not isinstance(p, AffineFn)})
        labels += sorted({format_value(v) for v in f.points if not is_finite(v)} - set(labels))
        out.append(
            f'<text x="{ox + _W - _PAD}" y="{oy + 30}" text-anchor="end" font-size="10">'
            f"also {', '.join(labels)}</text>"
        )
    out.append("</g>")
    return out


def emit_svg(values: Mapping[str, CostFunction], title: str = "") -> str:
    cols = 2 if len(values) > 1 else 1
    rows = max(1, -(-len(values) // cols))
    width, height = cols * _W, rows * _H + 24
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<text x="{width / 2}" y="16" text-anchor="middle">{escape(title or "value functions")}</text>',
    ]
    for i, (loc, f) in enumerate(values.items()):
        ox, oy = (i % cols) * _W, 24 + (i // cols) * _H
        out += _panel(loc, f, _PALETTE[i % len(_PALETTE)], ox, oy)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_results(res: Result, fmt: str) -> bytes:
    values = reported_values(res)
    if fmt == "csv":
        text = emit_csv(values)
    elif fmt == "json":
        text = emit_json(result_json(res))
    elif fmt == "svg":
        text = emit_svg(values, res.game.name)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return text.encode()
