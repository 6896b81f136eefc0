"""Minimal static SVG line charts.

The markup is generated by hand with fixed number formatting, so the same
input always gives the same bytes (no renderer version or timestamp leaks
into the file).
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import NamedTuple, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import ValidationError

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=130, top=40, bottom=55)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf")


class Series(NamedTuple):
    label: str
    x: np.ndarray
    y: np.ndarray


def curve_series(curves) -> list:
    """One series per TraceCurve, labelled ``n=<n>``."""
    return [Series(f"n={c.n}", np.asarray(c.gammas, float), np.asarray(c.values, float)) for c in curves]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, k: int = 5) -> list:
    return [lo + (hi - lo) * i / (k - 1) for i in range(k)]


def render_svg(series: Sequence[Series], xlabel: str, ylabel: str, title: str = "") -> str:
    series = [s for s in series if len(s.x)]
    if not series:
        raise ValidationError("nothing to plot: no series with data")
    xs = np.concatenate([s.x for s in series])
    ys = np.concatenate([s.y for s in series])
    finite = np.isfinite(xs) & np.isfinite(ys)
    if not finite.any():
        raise ValidationError("nothing to plot: no finite points")
    x0, x1 = float(xs[finite].min()), float(xs[finite].max())
    y0, y1 = float(ys[finite].min()), float(ys[finite].max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (1 - (y - y0) / (y1 - y0)) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" '
           f'fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{_fmt(px(t))}" y="{HEIGHT - MARGIN["bottom"] + 18}" font-size="11" '
                   f'text-anchor="middle">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{MARGIN["left"] - 6}" y="{_fmt(py(t) + 4)}" font-size="11" '
                   f'text-anchor="end">{t:.4g}</text>')
    out.append(f'<text x="{_fmt(MARGIN["left"] + pw / 2)}" y="{HEIGHT - 12}" font-size="13" '
               f'text-anchor="middle">{escape(xlabel)}</text>')
    cy = MARGIN["top"] + ph / 2
    out.append(f'<text x="18" y="{_fmt(cy)}" font-size="13" text-anchor="middle" '
               f'transform="rotate(-90 18 {_fmt(cy)})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="24" font-size="14" text-anchor="middle">{escape(title)}</text>')
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        ok = np.isfinite(s.x) & np.isfinite(s.y)
        pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(s.x[ok], s.y[ok]))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 14 + 18 * i
        lx = WIDTH - MARGIN["right"] + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="12">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(series: Sequence[Series], path, xlabel: str = "gamma (nats)",
              ylabel: str = "trace functional", title: str = "") -> Path:
    """Render and write an SVG; nothing is written when the input is empty."""
    svg = render_svg(series, xlabel, ylabel, title)
    path = Path(path)
    path.write_text(svg, encoding="utf-8")
    return path


def fidelity_series(label: str, ns, values) -> Series:
    v = np.array([math.nan if x is None else x for x in values], dtype=float)
    return Series(label, np.asarray(ns, dtype=float), v)
