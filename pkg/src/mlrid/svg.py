"""Standalone SVG line charts of trajectory CSV columns."""
import math

import numpy as np

from .experiment import read_csv

WIDTH, HEIGHT = 640, 400
MARGIN = 60
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def _ticks(lo, hi, log):
    if log:
        return [10.0 ** k for k in range(math.ceil(lo), math.floor(hi) + 1)]
    return list(np.linspace(lo, hi, 5))


def _label(v, log):
    return f"1e{int(round(math.log10(v)))}" if log else f"{v:.3g}"


def emit_svg(csv_path, columns, out_path, logx=True, logy=True, title=None):
    """Plot ``columns`` of ``csv_path`` against its ``n`` column.

    Non-positive values are dropped on a log axis.
    """
    header, body = read_csv(csv_path)
    if len(body) == 0:
        raise ValueError(f"{csv_path} has no data rows")
    missing = [c for c in columns if c not in header]
    if missing:
        raise ValueError(f"unknown column(s) {missing}; available: {header}")
    xcol = header.index("n") if "n" in header else 0
    x = body[:, xcol]
    series = []
    for c in columns:
        y = body[:, header.index(c)]
        keep = np.isfinite(y) & np.isfinite(x)
        if logx:
            keep &= x > 0
        if logy:
            keep &= y > 0
        series.append((c, x[keep], y[keep]))
    tx = (lambda v: np.log10(v)) if logx else (lambda v: v)
    ty = (lambda v: np.log10(v)) if logy else (lambda v: v)
    allx = np.concatenate([tx(s[1]) for s in series])
    ally = np.concatenate([ty(s[2]) for s in series])
    if len(allx) == 0:
        raise ValueError("nothing to plot after dropping non-positive values")
    x0, x1 = float(allx.min()), float(allx.max())
    y0, y1 = float(ally.min()), float(ally.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    def px(v):
        return MARGIN + (v - x0) / (x1 - x0) * (WIDTH - 2 * MARGIN)

    def py(v):
        return HEIGHT - MARGIN - (v - y0) / (y1 - y0) * (HEIGHT - 2 * MARGIN)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{MARGIN}" y="{MARGIN}" width="{WIDTH - 2 * MARGIN}" '
           f'height="{HEIGHT - 2 * MARGIN}" fill="none" stroke="black"/>']
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="{MARGIN / 2:.1f}" text-anchor="middle">{title}</text>')
    for t in _ticks(x0, x1, logx):
        v = math.log10(t) if logx else t
        out.append(f'<text x="{px(v):.2f}" y="{HEIGHT - MARGIN + 16:.2f}" text-anchor="middle">'
                   f'{_label(t, logx)}</text>')
    for t in _ticks(y0, y1, logy):
        v = math.log10(t) if logy else t
        out.append(f'<text x="{MARGIN - 6:.2f}" y="{py(v) + 4:.2f}" text-anchor="end">'
                   f'{_label(t, logy)}</text>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">n</text>')
    for k, (name, xs, ys) in enumerate(series):
        color = COLORS[k % len(COLORS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(tx(xs), ty(ys)))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(f'<text x="{WIDTH - MARGIN + 4}" y="{MARGIN + 14 * (k + 1)}" fill="{color}">{name}</text>')
    out.append("</svg>")
    with open(out_path, "w") as fh:
        fh.write("\n".join(out) + "\n")
    return out_path
