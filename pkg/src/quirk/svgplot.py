"""Tiny SVG line-plot emitter.

Just enough for overlay and per-edge plots: axes, ticks at the data extremes,
polylines, scatter points, and a legend. No plotting dependency; output is
plain XML.
"""

from __future__ import annotations

import numpy as np

# a small colorblind-friendly cycle
COLORS = ("#0072b2", "#d55e00", "#009e73", "#cc79a7", "#e69f00", "#56b4e9")

_MARGIN = {"left": 64, "right": 16, "top": 34, "bottom": 44}


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))


def _fmt(v: float) -> str:
    return f"{v:.6g}"


class Series:
    def __init__(self, xs, ys, label: str = "", points: bool = False):
        self.xs = np.asarray(xs, dtype=np.float64).reshape(-1)
        self.ys = np.asarray(ys, dtype=np.float64).reshape(-1)
        if self.xs.size != self.ys.size:
            raise ValueError("series xs and ys differ in length")
        self.label = label
        self.points = points  # scatter instead of polyline


def render(series, title: str = "", xlabel: str = "", ylabel: str = "",
           width: int = 640, height: int = 420) -> str:
    """SVG document string for the given list of Series."""
    series = list(series)
    if not series:
        raise ValueError("nothing to plot")
    finite = [np.isfinite(s.xs) & np.isfinite(s.ys) for s in series]
    if not any(f.any() for f in finite):
        raise ValueError("no finite data to plot")
    xs_all = np.concatenate([s.xs[f] for s, f in zip(series, finite)])
    ys_all = np.concatenate([s.ys[f] for s, f in zip(series, finite)])
    x0, x1 = float(xs_all.min()), float(xs_all.max())
    y0, y1 = float(ys_all.min()), float(ys_all.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    iw = width - _MARGIN["left"] - _MARGIN["right"]
    ih = height - _MARGIN["top"] - _MARGIN["bottom"]

    def px(x):
        return _MARGIN["left"] + (x - x0) / (x1 - x0) * iw

    def py(y):
        return _MARGIN["top"] + (y1 - y) / (y1 - y0) * ih

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    ax = (f'<rect x="{_MARGIN["left"]}" y="{_MARGIN["top"]}" width="{iw}" '
          f'height="{ih}" fill="none" stroke="#444" stroke-width="1"/>')
    out.append(ax)
    if title:
        out.append(f'<text x="{width / 2}" y="20" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="14">{_esc(title)}</text>')
    # tick labels at the corners of the data box
    out.append(f'<text x="{_MARGIN["left"]}" y="{height - 24}" '
               f'text-anchor="middle" font-family="sans-serif" font-size="11">'
               f'{_fmt(x0)}</text>')
    out.append(f'<text x="{width - _MARGIN["right"]}" y="{height - 24}" '
               f'text-anchor="middle" font-family="sans-serif" font-size="11">'
               f'{_fmt(x1)}</text>')
    out.append(f'<text x="{_MARGIN["left"] - 6}" y="{py(y0) + 4}" '
               f'text-anchor="end" font-family="sans-serif" font-size="11">'
               f'{_fmt(y0)}</text>')
    out.append(f'<text x="{_MARGIN["left"] - 6}" y="{py(y1) + 4}" '
               f'text-anchor="end" font-family="sans-serif" font-size="11">'
               f'{_fmt(y1)}</text>')
    if xlabel:
        out.append(f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12">{_esc(xlabel)}</text>')
    if ylabel:
        out.append(f'<text x="14" y="{height / 2}" text-anchor="middle" '
                   f'font-family="sans-serif" font-size="12" '
                   f'transform="rotate(-90 14 {height / 2})">{_esc(ylabel)}</text>')
    for idx, (s, f) in enumerate(zip(series, finite)):
        color = COLORS[idx % len(COLORS)]
        xs, ys = s.xs[f], s.ys[f]
        if s.points:
            for xv, yv in zip(xs, ys):
                out.append(f'<circle cx="{px(xv):.2f}" cy="{py(yv):.2f}" r="2.2" '
                           f'fill="{color}"/>')
        else:
            pts = " ".join(f"{px(xv):.2f},{py(yv):.2f}" for xv, yv in zip(xs, ys))
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                       f'stroke-width="1.6"/>')
        if s.label:
            ly = _MARGIN["top"] + 14 + 16 * idx
            lx = width - _MARGIN["right"] - 150
            out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" '
                       f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
            out.append(f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
                       f'font-size="11">{_esc(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out)


def save(path, series, **kwargs) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render(series, **kwargs) + "\n")
