"""Standalone SVG line plots with no plotting dependency.

Output is a pure function of the input, so identical data gives
byte-identical files.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["nice_ticks", "plot_svg", "render_svg"]

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=72, right=150, top=36, bottom=56)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
          "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def nice_ticks(lo: float, hi: float, target: int = 6) -> np.ndarray:
    """Tick positions at 1, 2 or 5 × 10^k covering [lo, hi]."""
    if hi < lo:
        lo, hi = hi, lo
    if hi == lo:
        pad = abs(lo) * 0.1 or 1.0
        lo, hi = lo - pad, hi + pad
    raw = (hi - lo) / max(target - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw * (1 - 1e-12))
    start = math.floor(lo / step + 1e-9) * step
    stop = math.ceil(hi / step - 1e-9) * step
    n = int(round((stop - start) / step)) + 1
    ticks = start + step * np.arange(n)
    return np.where(np.abs(ticks) < step * 1e-9, 0.0, ticks)


def _label(x: float) -> str:
    return "%.6g" % x


def _finite_series(series):
    out = []
    for item in series:
        label, x, y = item
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != y.shape:
            raise ValueError(f"series {label!r}: x and y differ in length")
        keep = np.isfinite(x) & np.isfinite(y)
        if not keep.any():
            raise ValueError(f"series {label!r} has no finite points")
        out.append((str(label), x[keep], y[keep]))
    return out


def render_svg(series: Sequence, xlabel: str = "", ylabel: str = "",
               title: str = "") -> str:
    """SVG text for ``series``, a sequence of ``(label, x, y)``.

    Non-finite points are dropped. Raises ``ValueError`` on an empty
    sequence or a series without finite points.
    """
    if not series:
        raise ValueError("nothing to plot: empty series set")
    data = _finite_series(series)
    xs = np.concatenate([x for _, x, _ in data])
    ys = np.concatenate([y for _, _, y in data])
    xt = nice_ticks(xs.min(), xs.max())
    yt = nice_ticks(ys.min(), ys.max())
    x0, x1, y0, y1 = xt[0], xt[-1], yt[0], yt[-1]
    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - left - MARGIN["right"]
    ph = HEIGHT - top - MARGIN["bottom"]

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if title:
        out.append(f'<text x="{left + pw / 2:.2f}" y="20" text-anchor="middle" '
                   f'font-size="13">{escape(title)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" '
               f'stroke="black"/>')
    for t in xt:
        X = px(t)
        out.append(f'<line x1="{X:.2f}" y1="{top + ph}" x2="{X:.2f}" y2="{top + ph + 5}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{X:.2f}" y="{top + ph + 18}" text-anchor="middle">'
                   f'{_label(t)}</text>')
    for t in yt:
        Y = py(t)
        out.append(f'<line x1="{left - 5}" y1="{Y:.2f}" x2="{left}" y2="{Y:.2f}" '
                   f'stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{Y + 4:.2f}" text-anchor="end">'
                   f'{_label(t)}</text>')
    if xlabel:
        out.append(f'<text x="{left + pw / 2:.2f}" y="{HEIGHT - 14}" text-anchor="middle">'
                   f'{escape(xlabel)}</text>')
    if ylabel:
        cy = top + ph / 2
        out.append(f'<text x="18" y="{cy:.2f}" text-anchor="middle" '
                   f'transform="rotate(-90 18 {cy:.2f})">{escape(ylabel)}</text>')
    for k, (label, x, y) in enumerate(data):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                   f'points="{pts}"><title>{escape(label)}</title></polyline>')
        ly = top + 10 + 18 * k
        lx = left + pw + 12
        out.append(f'<g class="legend-entry"><line x1="{lx}" y1="{ly}" x2="{lx + 20}" '
                   f'y2="{ly}" stroke="{color}" stroke-width="2"/>'
                   f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text></g>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_svg(series: Sequence, path: str, xlabel: str = "", ylabel: str = "",
             title: str = ""):
    """Write :func:`render_svg` output to ``path`` and return its manifest entry."""
    from .io import _entry

    text = render_svg(series, xlabel, ylabel, title)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return _entry(path, "svg")
