"""Dependency-free SVG scatter plots."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 640
HEIGHT = 640
MARGIN = 48
LEGEND_W = 170


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def scatter_svg(
    layers: Sequence[tuple[str, np.ndarray, str]],
    title: str = "",
    radius: float = 1.6,
    opacity: float = 0.6,
) -> str:
    """Overlay scatter layers ``(label, points (n, 2), colour)`` on shared axes."""
    pts = [np.atleast_2d(np.asarray(X, dtype=np.float64))[:, :2] for _, X, _ in layers]
    allp = np.concatenate([p for p in pts if p.size]) if any(p.size for p in pts) else np.zeros((1, 2))
    lo, hi = allp.min(axis=0), allp.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-9))
    centre = 0.5 * (lo + hi)
    lo = centre - 0.55 * span
    scale = (WIDTH - 2 * MARGIN) / (1.1 * span)

    def sx(x):
        return MARGIN + (x - lo[0]) * scale

    def sy(y):
        return HEIGHT - MARGIN - (y - lo[1]) * scale

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH + LEGEND_W}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH + LEGEND_W} {HEIGHT}">',
        f'<rect width="{WIDTH + LEGEND_W}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" height="{HEIGHT - 2 * MARGIN}" '
        'fill="none" stroke="#888"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="{MARGIN / 2 + 6}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="16">{escape(title)}</text>')
    # axis ticks at the frame corners
    for val, x, y, anchor in (
        (lo[0], MARGIN, HEIGHT - MARGIN + 16, "start"),
        (lo[0] + 1.1 * span, WIDTH - MARGIN, HEIGHT - MARGIN + 16, "end"),
    ):
        out.append(f'<text x="{x}" y="{y}" text-anchor="{anchor}" font-family="sans-serif" '
                   f'font-size="11">{_fmt(val)}</text>')
    for val, y in ((lo[1], HEIGHT - MARGIN), (lo[1] + 1.1 * span, MARGIN + 10)):
        out.append(f'<text x="{MARGIN - 4}" y="{y}" text-anchor="end" font-family="sans-serif" '
                   f'font-size="11">{_fmt(val)}</text>')
    for (label, _, colour), P in zip(layers, pts):
        out.append(f'<g fill="{colour}" fill-opacity="{opacity}">')
        out += [f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="{radius}"/>' for x, y in P]
        out.append("</g>")
    for j, (label, _, colour) in enumerate(layers):
        y = MARGIN + 18 * j + 8
        out.append(f'<circle cx="{WIDTH + 8}" cy="{y}" r="5" fill="{colour}"/>')
        out.append(f'<text x="{WIDTH + 18}" y="{y + 4}" font-family="sans-serif" font-size="12">'
                   f"{escape(label)}</text>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
