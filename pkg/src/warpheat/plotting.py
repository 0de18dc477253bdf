"""Minimal static SVG line plots (axes, polylines, dashed reference lines)."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence
from xml.sax.saxutils import escape

W, H = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 80, 20, 40, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    step = 10 ** math.floor(math.log10((hi - lo) / n))
    for m in (1, 2, 5, 10):
        if (hi - lo) / (m * step) <= n:
            step *= m
            break
    start = math.ceil(lo / step) * step
    out = []
    x = start
    while x <= hi + 1e-12 * step:
        out.append(x)
        x += step
    return out


def line_plot(path: str | Path, series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
              refs: Sequence[tuple[str, float]] = (), title: str = "", xlabel: str = "", ylabel: str = "",
              markers: bool = False) -> None:
    xs = [x for _, sx, _ in series for x in sx]
    ys = [y for _, _, sy in series for y in sy] + [y for _, y in refs]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    pad = 0.08 * (y1 - y0) if y1 > y0 else 0.05 * abs(y0) or 1.0
    y0, y1 = y0 - pad, y1 + pad

    def px(x: float) -> float:
        return LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT)

    def py(y: float) -> float:
        return H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
           f'<line x1="{LEFT}" y1="{H - BOTTOM}" x2="{W - RIGHT}" y2="{H - BOTTOM}" stroke="black"/>',
           f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{H - BOTTOM}" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.2f}" y1="{H - BOTTOM}" x2="{px(t):.2f}" y2="{H - BOTTOM + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{H - BOTTOM + 18}" text-anchor="middle" font-size="11">{t:.6g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{LEFT - 5}" y1="{py(t):.2f}" x2="{LEFT}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 8}" y="{py(t) + 4:.2f}" text-anchor="end" font-size="11">{t:.6g}</text>')
    out.append(f'<text x="{W / 2:.1f}" y="{H - 18}" text-anchor="middle" font-size="13">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{H / 2:.1f}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 18 {H / 2:.1f})">{escape(ylabel)}</text>')
    for k, (label, y) in enumerate(refs):
        out.append(f'<line x1="{LEFT}" y1="{py(y):.2f}" x2="{W - RIGHT}" y2="{py(y):.2f}" '
                   f'stroke="gray" stroke-dasharray="6,4"/>')
        out.append(f'<text x="{W - RIGHT - 4}" y="{py(y) - 4:.2f}" text-anchor="end" font-size="11" '
                   f'fill="gray">{escape(label)}</text>')
    for k, (label, sx, sy) in enumerate(series):
        c = COLORS[k % len(COLORS)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(sx, sy))
        if len(sx) > 1:
            out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" stroke-width="1.5"/>')
        if markers or len(sx) == 1:
            out += [f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3.5" fill="{c}"/>' for x, y in zip(sx, sy)]
        out.append(f'<text x="{LEFT + 10}" y="{TOP + 14 + 16 * k}" font-size="12" fill="{c}">{escape(label)}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")
