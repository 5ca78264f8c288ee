"""Standalone SVG 1.1 charts: monthly box plots and a dual-axis series plot.

Output depends only on the inputs (fixed number formatting, no
timestamps), so identical inputs give byte-identical documents. In box
plots the only ``<rect>`` elements are the boxes themselves.
"""
from __future__ import annotations

import datetime as dt
import math
from xml.sax.saxutils import escape

from .errors import EmptyInput

MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")
WIDTH, HEIGHT = 760, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 70, 40, 50


def _f(v: float) -> str:
    return f"{v:.2f}"


def nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi == lo:
        pad = abs(lo) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(1, target - 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    stop = math.ceil(hi / step) * step
    n = int(round((stop - start) / step))
    return [start + i * step for i in range(n + 1)]


def _tick_label(v: float) -> str:
    if abs(v) < 1e-12:
        v = 0.0
    return f"{v:.6g}"


def _header(title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<title>{escape(title)}</title>',
        f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">'
        f"{escape(title)}</text>",
    ]


class _Axis:
    def __init__(self, lo, hi):
        self.ticks = nice_ticks(lo, hi)
        self.lo, self.hi = self.ticks[0], self.ticks[-1]

    def y(self, v):
        span = self.hi - self.lo
        return HEIGHT - BOTTOM - (v - self.lo) / span * (HEIGHT - TOP - BOTTOM)


def _y_axis(axis: _Axis, x: float, side: int, label: str, colour="#000") -> list[str]:
    out = [f'<line x1="{_f(x)}" y1="{TOP}" x2="{_f(x)}" y2="{HEIGHT - BOTTOM}" stroke="{colour}"/>']
    anchor = "end" if side < 0 else "start"
    for t in axis.ticks:
        y = axis.y(t)
        out.append(f'<line x1="{_f(x)}" y1="{_f(y)}" x2="{_f(x + 5 * side)}" y2="{_f(y)}" stroke="{colour}"/>')
        out.append(
            f'<text x="{_f(x + 8 * side)}" y="{_f(y + 4)}" text-anchor="{anchor}" '
            f'font-family="sans-serif" font-size="11" fill="{colour}">{_tick_label(t)}</text>'
        )
    lx = x + 55 * side
    ly = (TOP + HEIGHT - BOTTOM) / 2
    out.append(
        f'<text x="{_f(lx)}" y="{_f(ly)}" text-anchor="middle" font-family="sans-serif" font-size="12" '
        f'fill="{colour}" transform="rotate(-90 {_f(lx)} {_f(ly)})">{escape(label)}</text>'
    )
    return out


def render_box_svg(stats, title: str, y_label: str = "") -> str:
    """Twelve-slot monthly box plot; ``stats[i]`` is a BoxStats or None."""
    stats = list(stats)
    if len(stats) != 12:
        raise ValueError("render_box_svg needs 12 monthly entries")
    present = [s for s in stats if s is not None and s.n > 0]
    if not present:
        raise EmptyInput("no month has data")
    axis = _Axis(min(s.min for s in present), max(s.max for s in present))
    plot_w = WIDTH - LEFT - RIGHT
    slot = plot_w / 12
    out = _header(title)
    out += _y_axis(axis, LEFT, -1, y_label)
    base = HEIGHT - BOTTOM
    out.append(f'<line x1="{LEFT}" y1="{base}" x2="{WIDTH - RIGHT}" y2="{base}" stroke="#000"/>')
    for i, s in enumerate(stats):
        cx = LEFT + slot * (i + 0.5)
        out.append(
            f'<text x="{_f(cx)}" y="{base + 18}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="11">{MONTHS[i]}</text>'
        )
        if s is None or s.n == 0:
            out.append(
                f'<text x="{_f(cx)}" y="{base - 6}" text-anchor="middle" font-family="sans-serif" '
                f'font-size="9" fill="#888">n/a</text>'
            )
            continue
        half = slot * 0.3
        y_q1, y_q3 = axis.y(s.q1), axis.y(s.q3)
        out.append(
            f'<line x1="{_f(cx)}" y1="{_f(axis.y(s.whisker_lo))}" x2="{_f(cx)}" y2="{_f(y_q1)}" stroke="#333"/>'
        )
        out.append(
            f'<line x1="{_f(cx)}" y1="{_f(y_q3)}" x2="{_f(cx)}" y2="{_f(axis.y(s.whisker_hi))}" stroke="#333"/>'
        )
        for w in (s.whisker_lo, s.whisker_hi):
            yw = axis.y(w)
            out.append(
                f'<line x1="{_f(cx - half / 2)}" y1="{_f(yw)}" x2="{_f(cx + half / 2)}" y2="{_f(yw)}" stroke="#333"/>'
            )
        out.append(
            f'<rect x="{_f(cx - half)}" y="{_f(y_q3)}" width="{_f(2 * half)}" height="{_f(y_q1 - y_q3)}" '
            f'fill="#9ecae1" stroke="#08519c"/>'
        )
        ym = axis.y(s.median)
        out.append(
            f'<line x1="{_f(cx - half)}" y1="{_f(ym)}" x2="{_f(cx + half)}" y2="{_f(ym)}" '
            f'stroke="#08519c" stroke-width="2"/>'
        )
        for o in s.outliers:
            out.append(f'<circle cx="{_f(cx)}" cy="{_f(axis.y(o))}" r="3" fill="none" stroke="#d62728"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def render_series_svg(left, right, title: str) -> str:
    """Two SeriesTables on a shared time axis with independent y axes.

    ``left`` is drawn against the left axis (typically rainfall) and
    ``right`` against the right axis (typically extent). Either may be
    None or empty, but not both.
    """
    series = [s for s in (left, right) if s is not None and len(s) > 0]
    if not series:
        raise EmptyInput("both series are empty")
    days = [d.toordinal() for s in series for d in s.dates]
    d0, d1 = min(days), max(days)
    if d1 == d0:
        d1 = d0 + 1
    plot_w = WIDTH - LEFT - RIGHT

    def x(d):
        return LEFT + (d.toordinal() - d0) / (d1 - d0) * plot_w

    out = _header(title)
    base = HEIGHT - BOTTOM
    out.append(f'<line x1="{LEFT}" y1="{base}" x2="{WIDTH - RIGHT}" y2="{base}" stroke="#000"/>')
    years = sorted({d.year for s in series for d in s.dates})
    for y in years:
        d = dt.date(y, 1, 1)
        if d0 <= d.toordinal() <= d1:
            xx = x(d)
            out.append(f'<line x1="{_f(xx)}" y1="{base}" x2="{_f(xx)}" y2="{base + 5}" stroke="#000"/>')
            out.append(
                f'<text x="{_f(xx)}" y="{base + 18}" text-anchor="middle" font-family="sans-serif" '
                f'font-size="11">{y}</text>'
            )
    for s, side, colour in ((left, -1, "#1f77b4"), (right, 1, "#d62728")):
        if s is None or len(s) == 0:
            continue
        axis = _Axis(float(s.values.min()), float(s.values.max()))
        xpos = LEFT if side < 0 else WIDTH - RIGHT
        label = s.label + (f" ({s.units})" if s.units else "")
        out += _y_axis(axis, xpos, side, label, colour)
        pts = " ".join(f"{_f(x(d))},{_f(axis.y(v))}" for d, v in zip(s.dates, s.values.tolist()))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
