"""Minimal SVG figures: heatmaps and line plots, no plotting dependency."""
from __future__ import annotations

import math
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

W, H, M = 480, 360, 48


def _doc(body: list, title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
            f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">')
    return "\n".join([head, '<rect width="100%" height="100%" fill="white"/>',
                      f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
                      *body, "</svg>"]) + "\n"


def _color(t: float) -> str:
    # white -> dark blue
    t = min(max(t, 0.0), 1.0)
    r = int(255 * (1 - t) + 8 * t)
    g = int(255 * (1 - t) + 48 * t)
    b = int(255 * (1 - t) + 107 * t)
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(counts, title: str = "", xlabel: str = "", ylabel: str = "") -> str:
    c = np.asarray(counts, dtype=float)
    nx, ny = c.shape
    top = c.max() if c.max() > 0 else 1.0
    pw, ph = (W - 2 * M) / nx, (H - 2 * M) / ny
    body = []
    for i in range(nx):
        for j in range(ny):
            if c[i, j] <= 0:
                continue
            x = M + i * pw
            y = H - M - (j + 1) * ph
            body.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{pw + 0.05:.2f}" height="{ph + 0.05:.2f}" '
                        f'fill="{_color(c[i, j] / top)}"/>')
    body.append(f'<rect x="{M}" y="{M}" width="{W - 2 * M}" height="{H - 2 * M}" fill="none" stroke="black"/>')
    body.append(f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    body.append(f'<text x="14" y="{H / 2}" transform="rotate(-90 14 {H / 2})" text-anchor="middle">{escape(ylabel)}</text>')
    return _doc(body, title)


def line_plot(series: Sequence[tuple], title: str = "", xlabel: str = "", ylabel: str = "",
              logx: bool = False, logy: bool = False, points: bool = False) -> str:
    """``series`` is a list of (x, y, label) triples."""
    tx = (lambda v: np.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: np.log10(v)) if logy else (lambda v: v)
    xs = [tx(np.asarray(s[0], dtype=float)) for s in series]
    ys = [ty(np.asarray(s[1], dtype=float)) for s in series]
    allx = np.concatenate(xs)
    ally = np.concatenate(ys)
    ok = np.isfinite(allx) & np.isfinite(ally)
    x0, x1 = allx[ok].min(), allx[ok].max()
    y0, y1 = ally[ok].min(), ally[ok].max()
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1

    def px(v):
        return M + (v - x0) / (x1 - x0) * (W - 2 * M)

    def py(v):
        return H - M - (v - y0) / (y1 - y0) * (H - 2 * M)

    colors = ["#1f4e79", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e"]
    body = [f'<rect x="{M}" y="{M}" width="{W - 2 * M}" height="{H - 2 * M}" fill="none" stroke="black"/>']
    for k, (x, y) in enumerate(zip(xs, ys)):
        col = colors[k % len(colors)]
        keep = np.isfinite(x) & np.isfinite(y)
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x[keep], y[keep]))
        if points:
            body.extend(f'<circle cx="{px(a):.2f}" cy="{py(b):.2f}" r="1.5" fill="{col}"/>'
                        for a, b in zip(x[keep], y[keep]))
        else:
            body.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.2"/>')
        label = series[k][2] if len(series[k]) > 2 else ""
        if label:
            body.append(f'<text x="{W - M - 4}" y="{M + 14 + 14 * k}" text-anchor="end" fill="{col}">{escape(label)}</text>')
    for v, anchor in ((x0, "start"), (x1, "end")):
        lab = f"1e{v:.2g}" if logx else f"{v:.3g}"
        body.append(f'<text x="{px(v):.1f}" y="{H - M + 14}" text-anchor="{anchor}">{lab}</text>')
    for v in (y0, y1):
        lab = f"1e{v:.2g}" if logy else f"{v:.3g}"
        body.append(f'<text x="{M - 4}" y="{py(v) + 4:.1f}" text-anchor="end">{lab}</text>')
    body.append(f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    body.append(f'<text x="14" y="{H / 2}" transform="rotate(-90 14 {H / 2})" text-anchor="middle">{escape(ylabel)}</text>')
    return _doc(body, title)


def write(path, text: str) -> None:
    with open(path, "w") as fh:
        fh.write(text)
