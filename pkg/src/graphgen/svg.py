"""Minimal static SVG charts (violin and scatter) with byte-stable output."""
from __future__ import annotations

from pathlib import Path

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = 50
PALETTE = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3", "#937860")


def _f(v: float) -> str:
    return f"{v:.2f}"


def _esc(text) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def _frame(title, ylabel, y0, y1):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="20" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - 10}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="30" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="14" y="{HEIGHT / 2:.0f}" font-size="12" transform="rotate(-90 14 '
        f'{HEIGHT / 2:.0f})" text-anchor="middle">{_esc(ylabel)}</text>',
    ]
    for v in np.linspace(y0, y1, 5):
        y = _ymap(v, y0, y1)
        parts.append(f'<text x="{MARGIN - 4}" y="{_f(y + 4)}" font-size="10" '
                     f'text-anchor="end">{v:.3g}</text>')
    return parts


def _ymap(v, y0, y1):
    span = (y1 - y0) or 1.0
    return HEIGHT - MARGIN - (v - y0) / span * (HEIGHT - MARGIN - 30)


def _xmap(v, x0, x1):
    span = (x1 - x0) or 1.0
    return MARGIN + (v - x0) / span * (WIDTH - MARGIN - 20)


def _kde(values, grid):
    values = np.asarray(values, dtype=float)
    if values.size < 2 or np.ptp(values) == 0:
        out = np.zeros_like(grid)
        out[np.argmin(np.abs(grid - values.mean()))] = 1.0
        return out
    bw = 1.06 * values.std() * values.size ** -0.2
    z = (grid[:, None] - values[None, :]) / bw
    return np.exp(-0.5 * z * z).sum(axis=1)


def violin_svg(rows, title="", ylabel="value") -> str:
    """One violin per ``group`` over the row ``value`` entries, median marked."""
    groups: dict = {}
    for r in rows:
        groups.setdefault(str(r["group"]), []).append(float(r["value"]))
    allv = np.concatenate([np.asarray(v) for v in groups.values()])
    y0, y1 = float(allv.min()), float(allv.max())
    if y0 == y1:
        y0, y1 = y0 - 0.5, y1 + 0.5
    parts = _frame(title, ylabel, y0, y1)
    slot = (WIDTH - MARGIN - 20) / len(groups)
    grid = np.linspace(y0, y1, 60)
    for i, (name, vals) in enumerate(groups.items()):
        cx = MARGIN + slot * (i + 0.5)
        dens = _kde(vals, grid)
        half = dens / dens.max() * slot * 0.4 if dens.max() > 0 else dens
        right = [f"{_f(cx + h)},{_f(_ymap(g, y0, y1))}" for g, h in zip(grid, half)]
        left = [f"{_f(cx - h)},{_f(_ymap(g, y0, y1))}" for g, h in zip(grid[::-1], half[::-1])]
        color = PALETTE[i % len(PALETTE)]
        parts.append(f'<polygon points="{" ".join(right + left)}" fill="{color}" '
                     f'fill-opacity="0.5" stroke="{color}"/>')
        med = _ymap(float(np.median(vals)), y0, y1)
        parts.append(f'<line x1="{_f(cx - slot * 0.3)}" y1="{_f(med)}" x2="{_f(cx + slot * 0.3)}" '
                     f'y2="{_f(med)}" stroke="black"/>')
        parts.append(f'<text x="{_f(cx)}" y="{HEIGHT - MARGIN + 15}" font-size="10" '
                     f'text-anchor="middle">{_esc(name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter_svg(rows, title="", xlabel="x", ylabel="y") -> str:
    """Markers at (``x``, ``y``) with a dashed y = x reference line."""
    xs = np.array([float(r["x"]) for r in rows])
    ys = np.array([float(r["y"]) for r in rows])
    lo = float(min(xs.min(), ys.min()))
    hi = float(max(xs.max(), ys.max()))
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    parts = _frame(title, ylabel, lo, hi)
    parts.append(f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 12}" font-size="12" '
                 f'text-anchor="middle">{_esc(xlabel)}</text>')
    parts.append(f'<line x1="{_f(_xmap(lo, lo, hi))}" y1="{_f(_ymap(lo, lo, hi))}" '
                 f'x2="{_f(_xmap(hi, lo, hi))}" y2="{_f(_ymap(hi, lo, hi))}" '
                 f'stroke="gray" stroke-dasharray="4 3"/>')
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{_f(_xmap(x, lo, hi))}" cy="{_f(_ymap(y, lo, hi))}" r="3" '
                     f'fill="{PALETTE[0]}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg(rows, kind: str, path, **labels) -> None:
    """Write a violin (rows with ``group``, ``value``) or scatter (``x``, ``y``) chart."""
    rows = list(rows)
    if not rows:
        raise ValueError("no rows to plot")
    if kind == "violin":
        text = violin_svg(rows, **labels)
    elif kind == "scatter":
        text = scatter_svg(rows, **labels)
    else:
        raise ValueError(f"kind must be violin or scatter, got {kind!r}")
    Path(path).write_text(text, encoding="utf-8")
