"""Bar diagrams of restoration and model-search traces, plus Pareto borders.

Each column is one lattice vector (restoration traces) or one visited model
(search traces).  Colours: tested-refuted red, tested-verified black,
inferred-refuted yellow, inferred-verified grey, untested white.
"""

from __future__ import annotations

import operator
import re
from dataclasses import dataclass
from typing import Callable, Optional
from xml.sax.saxutils import escape

import numpy as np

from .trace import INFERRED, Trace

UNTESTED = "untested"
PALETTE = {
    "tested-refuted": "red",
    "tested-verified": "black",
    "inferred-refuted": "yellow",
    "inferred-verified": "grey",
    UNTESTED: "white",
}
FULL_LATTICE_MAX_N = 6


@dataclass(frozen=True)
class Column:
    key: str
    verdict_class: str
    forced_by: Optional[str] = None
    seq: Optional[int] = None

    @property
    def weight(self) -> int:
        return self.key.count("1") if _is_bits(self.key) else 0


@dataclass(frozen=True)
class BarDiagram:
    columns: tuple[Column, ...]
    arrangement: str


@dataclass(frozen=True)
class ParetoBorder:
    lower: frozenset
    upper: frozenset


def _is_bits(s: str) -> bool:
    return bool(s) and set(s) <= {"0", "1"}


def _leq(a: int, b: int) -> bool:
    return a & ~b == 0


def _vector_events(trace: Trace) -> bool:
    kinds = {e.vector is not None for e in trace}
    if len(kinds) > 1:
        raise ValueError("trace mixes vector and model events")
    return kinds == {True}


def _latest(trace: Trace) -> dict:
    """key -> last event, rejecting contradictory verdicts for the same key."""
    out = {}
    for e in trace:
        prev = out.get(e.key)
        if prev is not None and prev.verdict != e.verdict:
            raise ValueError(f"conflicting verdicts for {e.key}: events {prev.seq} and {e.seq}")
        out[e.key] = e
    return out


def bar_diagram(trace: Trace, arrangement: str = "chronological") -> BarDiagram:
    if arrangement not in ("chronological", "pareto"):
        raise ValueError(f"unknown arrangement {arrangement!r}")
    trace.validate()
    events = _latest(trace)
    by_seq = {e.seq: e for e in trace}
    cols = []
    for key, e in events.items():
        forced = by_seq[e.forced_by].key if e.source == INFERRED else None
        cols.append(Column(key, e.label, forced, e.seq))
    if trace.events and _vector_events(trace):
        widths = {len(k) for k in events}
        if len(widths) != 1:
            raise ValueError("trace vectors have different lengths")
        n = widths.pop()
        if n <= FULL_LATTICE_MAX_N:
            for v in range(1 << n):
                key = format(v, f"0{n}b")
                if key not in events:
                    cols.append(Column(key, UNTESTED))
    if arrangement == "chronological":
        cols.sort(key=lambda c: (c.seq is None, c.seq if c.seq is not None else 0, c.key))
    else:
        cols.sort(key=lambda c: (c.weight, c.key))
    return BarDiagram(tuple(cols), arrangement)


_HIGHLIGHT = re.compile(r"^\s*weight\s*(<=|>=|==|!=|<|>|=)\s*(\d+)\s*$")
_OPS = {"<": operator.lt, "<=": operator.le, ">": operator.gt, ">=": operator.ge,
        "==": operator.eq, "=": operator.eq, "!=": operator.ne}


def parse_highlight(text: Optional[str]) -> Optional[Callable[[Column], bool]]:
    """Parse a filter such as ``weight>=2`` into a column predicate."""
    if text is None:
        return None
    m = _HIGHLIGHT.match(text)
    if not m:
        raise ValueError(f"highlight must look like 'weight>=2', got {text!r}")
    op, k = _OPS[m.group(1)], int(m.group(2))
    return lambda c: op(c.weight, k)


def _render_text(diagram: BarDiagram, hl) -> str:
    lines = [f"# {len(diagram.columns)} columns, {diagram.arrangement}"]
    for c in diagram.columns:
        mark = "*" if hl is not None and hl(c) else " "
        extra = f" <- {c.forced_by}" if c.forced_by is not None else ""
        lines.append(f"{mark} {c.key:<24} {c.verdict_class}{extra}")
    return "\n".join(lines) + "\n"


def _render_svg(diagram: BarDiagram, hl) -> str:
    bar_w, gap, bar_h, top, label_h = 14, 4, 80, 20, 90
    n = len(diagram.columns)
    width = max(200, 20 + n * (bar_w + gap))
    height = top + bar_h + label_h + 40
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="10" y="14" font-family="monospace" font-size="11">'
        f'{n} columns ({escape(diagram.arrangement)})</text>',
    ]
    for i, c in enumerate(diagram.columns):
        x = 10 + i * (bar_w + gap)
        stroke_w = 3 if hl is not None and hl(c) else 1
        title = escape(f"{c.key}: {c.verdict_class}" + (f" (forced by {c.forced_by})" if c.forced_by else ""))
        out.append(f'<rect x="{x}" y="{top}" width="{bar_w}" height="{bar_h}" '
                   f'fill="{PALETTE[c.verdict_class]}" stroke="black" stroke-width="{stroke_w}">'
                   f'<title>{title}</title></rect>')
        ly = top + bar_h + 6
        out.append(f'<text x="{x + bar_w - 3}" y="{ly}" font-family="monospace" font-size="9" '
                   f'transform="rotate(90 {x + bar_w - 3} {ly})">{escape(c.key[:14])}</text>')
    ly = top + bar_h + label_h + 10
    for j, (cls, colour) in enumerate(PALETTE.items()):
        lx = 10 + j * 110
        out.append(f'<rect x="{lx}" y="{ly}" width="10" height="10" fill="{colour}" stroke="black"/>')
        out.append(f'<text x="{lx + 14}" y="{ly + 9}" font-family="monospace" font-size="9">{cls}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_trace(trace: Trace, fmt: str = "svg", arrangement: str = "chronological",
                 highlight: Optional[str] = None) -> str:
    """Render ``trace`` deterministically as an SVG or plain-text bar diagram."""
    if fmt not in ("svg", "text"):
        raise ValueError(f"unknown format {fmt!r}")
    diagram = bar_diagram(trace, arrangement)
    hl = parse_highlight(highlight)
    return _render_svg(diagram, hl) if fmt == "svg" else _render_text(diagram, hl)


def pareto_border(trace: Trace) -> ParetoBorder:
    """Minimal verified and maximal refuted elements of ``trace``.

    Vector traces use the componentwise order; model traces have no order
    recorded, so their elements are treated as pairwise incomparable.
    """
    trace.validate()
    events = _latest(trace)
    ones = sorted(k for k, e in events.items() if e.verdict == 1)
    zeros = sorted(k for k, e in events.items() if e.verdict == 0)
    if not trace.events or not _vector_events(trace):
        return ParetoBorder(frozenset(ones), frozenset(zeros))
    width = len(next(iter(events)))
    if width > 63:
        return _pareto_pairwise(ones, zeros)
    one_v = np.array([int(k, 2) for k in ones], dtype=np.int64)
    zero_v = np.array([int(k, 2) for k in zeros], dtype=np.int64)
    # clash[i, j]: verified vector i lies under refuted vector j
    clash = (one_v[:, None] & ~zero_v[None, :]) == 0
    if clash.any():
        i, j = np.argwhere(clash)[0]
        raise ValueError(f"not monotone: {ones[i]} is verified but {zeros[j]} >= {ones[i]} is refuted")
    below_ones = (one_v[:, None] & ~one_v[None, :]) == 0
    np.fill_diagonal(below_ones, False)
    below_zeros = (zero_v[:, None] & ~zero_v[None, :]) == 0
    np.fill_diagonal(below_zeros, False)
    lower = {ones[i] for i in np.flatnonzero(~below_ones.any(axis=0))}
    upper = {zeros[i] for i in np.flatnonzero(~below_zeros.any(axis=1))}
    return ParetoBorder(frozenset(lower), frozenset(upper))


def _pareto_pairwise(ones: list, zeros: list) -> ParetoBorder:
    ival = {k: int(k, 2) for k in ones + zeros}
    for a in ones:
        for b in zeros:
            if _leq(ival[a], ival[b]):
                raise ValueError(f"not monotone: {a} is verified but {b} >= {a} is refuted")
    lower = {a for a in ones if not any(b != a and _leq(ival[b], ival[a]) for b in ones)}
    upper = {a for a in zeros if not any(b != a and _leq(ival[a], ival[b]) for b in zeros)}
    return ParetoBorder(frozenset(lower), frozenset(upper))
