"""Minimal deterministic SVG line plots.

Hand-rolled renderer so that identical inputs yield byte-identical SVG:
fixed canvas, fixed palette, fixed decimal formatting, no timestamps or
hashed ids.  Supports linear and log axes, one polyline per curve, and a
simple legend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
REFERENCE_STYLE = ("#444444", "6,4")

WIDTH, HEIGHT = 720, 540
MARGIN_LEFT, MARGIN_RIGHT = 72, 24
MARGIN_TOP, MARGIN_BOTTOM = 40, 56


@dataclass(frozen=True)
class Curve:
    label: str
    xs: Sequence[float]
    ys: Sequence[float]
    dashed: bool = False
    color: str | None = None


def _nice_ticks(lo: float, hi: float, target: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * step:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    ticks = []
    e = math.floor(math.log10(lo))
    while 10.0**e <= hi * (1 + 1e-12):
        if 10.0**e >= lo * (1 - 1e-12):
            ticks.append(10.0**e)
        e += 1
    return ticks or [lo, hi]


def _fmt_tick(value: float) -> str:
    return f"{value:g}"


class _Scale:
    def __init__(self, lo, hi, out_lo, out_hi, log=False):
        if log:
            if lo <= 0:
                raise ValueError("log scale needs positive data")
            self.lo, self.hi = math.log10(lo), math.log10(hi)
        else:
            self.lo, self.hi = lo, hi
        if self.hi == self.lo:
            self.hi = self.lo + 1.0
        self.out_lo, self.out_hi = out_lo, out_hi
        self.log = log

    def __call__(self, value: float) -> float:
        v = math.log10(value) if self.log else value
        frac = (v - self.lo) / (self.hi - self.lo)
        return self.out_lo + frac * (self.out_hi - self.out_lo)


def render_line_plot(
    curves: Sequence[Curve],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    x_log: bool = False,
    y_log: bool = False,
    x_range: tuple[float, float] | None = None,
    y_range: tuple[float, float] | None = None,
) -> str:
    """Render curves to an SVG document string."""
    if not curves:
        raise ValueError("nothing to plot")
    all_x = [x for c in curves for x in c.xs]
    all_y = [y for c in curves for y in c.ys]
    if not all_x:
        raise ValueError("curves contain no points")
    x_lo, x_hi = x_range or (min(all_x), max(all_x))
    y_lo, y_hi = y_range or (min(all_y), max(all_y))
    if y_range is None and not y_log:
        pad = 0.05 * (y_hi - y_lo or 1.0)
        y_lo, y_hi = y_lo - pad, y_hi + pad

    sx = _Scale(x_lo, x_hi, MARGIN_LEFT, WIDTH - MARGIN_RIGHT, log=x_log)
    sy = _Scale(y_lo, y_hi, HEIGHT - MARGIN_BOTTOM, MARGIN_TOP, log=y_log)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{WIDTH / 2:.2f}" y="24" text-anchor="middle" '
            f'font-family="monospace" font-size="16">{_escape(title)}</text>'
        )

    x_ticks = _log_ticks(x_lo, x_hi) if x_log else _nice_ticks(x_lo, x_hi)
    y_ticks = _log_ticks(y_lo, y_hi) if y_log else _nice_ticks(y_lo, y_hi)
    axis_bottom = HEIGHT - MARGIN_BOTTOM
    for t in x_ticks:
        px = sx(t)
        parts.append(
            f'<line x1="{px:.2f}" y1="{MARGIN_TOP}" x2="{px:.2f}" '
            f'y2="{axis_bottom}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{px:.2f}" y="{axis_bottom + 18}" text-anchor="middle" '
            f'font-family="monospace" font-size="11">{_fmt_tick(t)}</text>'
        )
    for t in y_ticks:
        py = sy(t)
        parts.append(
            f'<line x1="{MARGIN_LEFT}" y1="{py:.2f}" x2="{WIDTH - MARGIN_RIGHT}" '
            f'y2="{py:.2f}" stroke="#dddddd" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{MARGIN_LEFT - 6}" y="{py + 4:.2f}" text-anchor="end" '
            f'font-family="monospace" font-size="11">{_fmt_tick(t)}</text>'
        )
    parts.append(
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" '
        f'width="{WIDTH - MARGIN_LEFT - MARGIN_RIGHT}" '
        f'height="{axis_bottom - MARGIN_TOP}" fill="none" stroke="black" '
        f'stroke-width="1"/>'
    )
    if x_label:
        parts.append(
            f'<text x="{(MARGIN_LEFT + WIDTH - MARGIN_RIGHT) / 2:.2f}" '
            f'y="{HEIGHT - 12}" text-anchor="middle" font-family="monospace" '
            f'font-size="13">{_escape(x_label)}</text>'
        )
    if y_label:
        cy = (MARGIN_TOP + axis_bottom) / 2
        parts.append(
            f'<text x="18" y="{cy:.2f}" text-anchor="middle" '
            f'font-family="monospace" font-size="13" '
            f'transform="rotate(-90 18 {cy:.2f})">{_escape(y_label)}</text>'
        )

    for i, curve in enumerate(curves):
        color = curve.color or PALETTE[i % len(PALETTE)]
        dash = f' stroke-dasharray="{REFERENCE_STYLE[1]}"' if curve.dashed else ""
        points = " ".join(
            f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(curve.xs, curve.ys)
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.8"'
            f'{dash} points="{points}"/>'
        )

    # Legend, top-right inside the frame.
    legend_x = WIDTH - MARGIN_RIGHT - 190
    legend_y = MARGIN_TOP + 12
    for i, curve in enumerate(curves):
        color = curve.color or PALETTE[i % len(PALETTE)]
        dash = f' stroke-dasharray="{REFERENCE_STYLE[1]}"' if curve.dashed else ""
        y = legend_y + 18 * i
        parts.append(
            f'<line x1="{legend_x}" y1="{y}" x2="{legend_x + 26}" y2="{y}" '
            f'stroke="{color}" stroke-width="1.8"{dash}/>'
        )
        parts.append(
            f'<text x="{legend_x + 32}" y="{y + 4}" font-family="monospace" '
            f'font-size="12">{_escape(curve.label)}</text>'
        )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
