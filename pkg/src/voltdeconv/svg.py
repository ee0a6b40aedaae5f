"""Minimal self-contained SVG line plots.

Each polyline carries its raw data in ``data-x``/``data-y`` attributes so the
figure can be checked against the CSV it was drawn from.
"""

from __future__ import annotations

import math
from typing import Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["line_plot"]

Series = Tuple[str, Sequence[float], Sequence[float]]

_COLORS = ("#000000", "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")
_DASHES = ("", "6,3", "2,2", "8,3,2,3", "", "6,3")

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 160, 40, 50


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def _ticks(lo: float, hi: float, count: int = 5):
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, count))


def _range(values: np.ndarray) -> Tuple[float, float]:
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return 0.0, 1.0
    lo, hi = float(finite.min()), float(finite.max())
    if hi == lo:
        pad = abs(lo) * 0.1 or 1.0
        return lo - pad, hi + pad
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def line_plot(series: Sequence[Series], title: str = "", xlabel: str = "",
              ylabel: str = "") -> str:
    """Render ``(label, x, y)`` series as one SVG document."""
    xs = np.concatenate([np.asarray(s[1], dtype=float) for s in series]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(s[2], dtype=float) for s in series]) if series else np.zeros(1)
    x0, x1 = _range(xs)
    y0, y1 = _range(ys)
    pw = WIDTH - LEFT - RIGHT
    ph = HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (y1 - y) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{LEFT + pw / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
        f"{escape(title)}</text>",
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#444444"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.2f}" y1="{TOP + ph}" x2="{px(t):.2f}" '
                   f'y2="{TOP + ph + 4}" stroke="#444444"/>')
        out.append(f'<text x="{px(t):.2f}" y="{TOP + ph + 16}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{LEFT - 4}" y1="{py(t):.2f}" x2="{LEFT}" y2="{py(t):.2f}" '
                   f'stroke="#444444"/>')
        out.append(f'<text x="{LEFT - 6}" y="{py(t) + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    if 0.0 > y0 and 0.0 < y1:
        out.append(f'<line x1="{LEFT}" y1="{py(0.0):.2f}" x2="{LEFT + pw}" y2="{py(0.0):.2f}" '
                   'stroke="#bbbbbb" stroke-dasharray="3,3"/>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">'
               f"{escape(xlabel)}</text>")
    out.append(f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')

    for idx, (label, x, y) in enumerate(series):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        color = _COLORS[idx % len(_COLORS)]
        dash = _DASHES[idx % len(_DASHES)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y)
                       if math.isfinite(a) and math.isfinite(b))
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} '
            f'points="{pts}" data-label="{escape(label)}" '
            f'data-x="{" ".join(map(_fmt, x))}" data-y="{" ".join(map(_fmt, y))}"/>'
        )
        if len(x) == 1 and math.isfinite(x[0]) and math.isfinite(y[0]):
            out.append(f'<circle cx="{px(x[0]):.2f}" cy="{py(y[0]):.2f}" r="3" fill="{color}"/>')
        ly = TOP + 14 + 18 * idx
        lx = LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" '
                   f'stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{lx + 30}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
