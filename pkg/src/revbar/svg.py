"""Minimal SVG emitter for profile curves and barcodes."""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .persistence_core import Barcode

_W, _H, _PAD = 640, 360, 48
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _frame(title: str, body: list[str], xlabel: str, ylabel: str) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{_PAD}" y1="{_H - _PAD}" x2="{_W - _PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<line x1="{_PAD}" y1="{_PAD}" x2="{_PAD}" y2="{_H - _PAD}" stroke="black"/>',
        f'<text x="{_W / 2}" y="{_H - 12}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="14" y="{_H / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {_H / 2})">{escape(ylabel)}</text>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def _scale(lo: float, hi: float, a: float, b: float):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def line_plot(
    x: Sequence[float],
    series: Sequence[Sequence[float]],
    labels: Sequence[str],
    title: str = "",
    xlabel: str = "l",
    ylabel: str = "",
) -> str:
    """Polyline chart; every series shares the x samples."""
    x = np.asarray(x, dtype=float)
    ys = [np.asarray(s, dtype=float) for s in series]
    finite = np.concatenate([y[np.isfinite(y)] for y in ys]) if ys else np.zeros(1)
    ylo, yhi = float(finite.min()), float(finite.max())
    sx = _scale(float(x.min()), float(x.max()), _PAD, _W - _PAD)
    sy = _scale(ylo, yhi, _H - _PAD, _PAD)
    body = []
    for i, (y, label) in enumerate(zip(ys, labels)):
        color = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{_fmt(sx(a))},{_fmt(sy(b))}" for a, b in zip(x, y) if math.isfinite(b))
        body.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        body.append(
            f'<text x="{_W - _PAD}" y="{_PAD + 14 * i}" text-anchor="end" font-size="11" '
            f'fill="{color}">{escape(label)}</text>'
        )
    body.append(f'<text x="{_PAD - 4}" y="{_PAD}" text-anchor="end" font-size="10">{yhi:.4g}</text>')
    body.append(f'<text x="{_PAD - 4}" y="{_H - _PAD}" text-anchor="end" font-size="10">{ylo:.4g}</text>')
    return _frame(title, body, xlabel, ylabel)


def barcode_plot(code: Barcode, title: str = "", axis: str = "energy") -> str:
    """Bars stacked by degree; infinite bars run to the right edge with an arrow."""
    bars = list(code)
    ends = [b.birth for b in bars] + [b.death for b in bars if b.death is not None]
    lo = min(ends, default=0.0)
    hi = max(ends, default=1.0)
    if hi <= lo:
        hi = lo + 1.0
    hi_plot = hi + 0.1 * (hi - lo)
    sx = _scale(lo, hi_plot, _PAD, _W - _PAD)
    rows = max(1, len(bars))
    step = (_H - 2 * _PAD) / (rows + 1)
    body = []
    for i, b in enumerate(bars):
        y = _PAD + step * (i + 1)
        color = _COLORS[b.degree % len(_COLORS)]
        x2 = sx(hi_plot) if b.death is None else sx(b.death)
        body.append(
            f'<line x1="{_fmt(sx(b.birth))}" y1="{_fmt(y)}" x2="{_fmt(x2)}" y2="{_fmt(y)}" '
            f'stroke="{color}" stroke-width="3"/>'
        )
        if b.death is None:
            body.append(f'<text x="{_fmt(x2)}" y="{_fmt(y + 4)}" font-size="11" fill="{color}">&#8594;</text>')
        body.append(f'<text x="{_PAD - 4}" y="{_fmt(y + 4)}" text-anchor="end" font-size="10">H{b.degree}</text>')
    body.append(f'<text x="{_PAD}" y="{_H - _PAD + 14}" font-size="10">{lo:.4g}</text>')
    body.append(f'<text x="{_W - _PAD}" y="{_H - _PAD + 14}" text-anchor="end" font-size="10">{hi:.4g}</text>')
    if code.threshold is not None:
        t = sx(code.threshold)
        body.append(
            f'<line x1="{_fmt(t)}" y1="{_PAD}" x2="{_fmt(t)}" y2="{_H - _PAD}" stroke="gray" stroke-dasharray="4 3"/>'
        )
    return _frame(title, body, axis, "bars")
