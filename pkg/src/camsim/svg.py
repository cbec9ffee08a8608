"""Tiny SVG line and scatter plots; CSV files stay the authoritative output."""

from __future__ import annotations

from html import escape

import numpy as np

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


def _ticks(lo, hi, n=5):
    return np.linspace(lo, hi, n)


def plot_svg(path, series, title: str = "", xlabel: str = "", ylabel: str = "",
             scatter: bool = False, width: int = 480, height: int = 320, diagonal: bool = False) -> None:
    """``series`` is a list of ``(label, x, y)``."""
    ml, mr, mt, mb = 60, 20, 30, 45
    xs = np.concatenate([np.asarray(s[1], float) for s in series])
    ys = np.concatenate([np.asarray(s[2], float) for s in series])
    x0, x1 = float(np.nanmin(xs)), float(np.nanmax(xs))
    y0, y1 = min(0.0, float(np.nanmin(ys))), float(np.nanmax(ys))
    if diagonal:
        x0 = y0 = min(x0, y0)
        x1 = y1 = max(x1, y1)
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0
    pw, ph = width - ml - mr, height - mt - mb

    def sx(v):
        return ml + (np.asarray(v, float) - x0) / (x1 - x0) * pw

    def sy(v):
        return mt + ph - (np.asarray(v, float) - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{mt + ph + 15}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{ml - 5}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:.3g}</text>')
    if diagonal:
        out.append(f'<line x1="{sx(x0):.1f}" y1="{sy(y0):.1f}" x2="{sx(x1):.1f}" y2="{sy(y1):.1f}" '
                   'stroke="#999" stroke-dasharray="4 3"/>')
    for i, (label, x, y) in enumerate(series):
        col = _COLOURS[i % len(_COLOURS)]
        px, py = sx(x), sy(y)
        if scatter:
            out.extend(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="2.5" fill="{col}"/>' for a, b in zip(px, py))
        else:
            pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in zip(px, py))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        out.append(f'<text x="{ml + pw - 5}" y="{mt + 14 + 13 * i}" text-anchor="end" fill="{col}">'
                   f'{escape(str(label))}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2})">{escape(ylabel)}</text>')
    out.append(f'<text x="{width / 2}" y="18" text-anchor="middle">{escape(title)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
