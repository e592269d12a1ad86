"""Minimal deterministic SVG emitter for line charts, heatmaps, and tables.

No plotting dependency: the figures here are polylines, rectangles, and
text, which is all the pipeline's reports need.  All coordinates are
formatted to fixed precision so identical inputs produce byte-identical
files (golden-file friendly).
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

__all__ = ["LineChart", "heatmap_svg", "table_svg"]

PALETTE = ("#1f6fb2", "#d1495b", "#2e8b57", "#e69f00", "#6a51a3", "#444444")

_FONT = 'font-family="Helvetica,Arial,sans-serif"'


def _f(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5):
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


def _tick_label(v: float) -> str:
    if v == int(v) and abs(v) < 1e6:
        return str(int(v))
    return f"{v:g}"


class LineChart:
    """Axes + polyline/marker series with a legend."""

    def __init__(self, title="", xlabel="", ylabel="", width=640, height=440,
                 logy=False):
        self.title, self.xlabel, self.ylabel = title, xlabel, ylabel
        self.width, self.height = width, height
        self.logy = logy
        self.series = []
        self.vlines = []
        self.hlines = []
        self.annotations = []

    def add_series(self, name, x, y, markers=False, color=None):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y)
        self.series.append((str(name), x[ok], y[ok], markers, color))

    def add_vline(self, x, label=""):
        self.vlines.append((float(x), str(label)))

    def add_hline(self, y, label=""):
        self.hlines.append((float(y), str(label)))

    def annotate(self, x, y, text):
        self.annotations.append((float(x), float(y), str(text)))

    def render(self) -> str:
        ml, mr, mt, mb = 62, 16, 36, 48
        pw, ph = self.width - ml - mr, self.height - mt - mb
        xs = np.concatenate([s[1] for s in self.series]) if self.series else np.array([0.0, 1.0])
        ys = np.concatenate([s[2] for s in self.series]) if self.series else np.array([0.0, 1.0])
        for x, _ in self.vlines:
            xs = np.append(xs, x)
        for y, _ in self.hlines:
            ys = np.append(ys, y)
        if self.logy:
            ys = ys[ys > 0]
            if ys.size == 0:
                ys = np.array([0.1, 1.0])
            ys = np.log10(ys)
        x0, x1 = float(xs.min()), float(xs.max())
        y0, y1 = float(ys.min()), float(ys.max())
        if x1 <= x0:
            x0, x1 = x0 - 0.5, x0 + 0.5
        if y1 <= y0:
            y0, y1 = y0 - 0.5, y0 + 0.5
        padx, pady = 0.03 * (x1 - x0), 0.05 * (y1 - y0)
        x0, x1 = x0 - padx, x1 + padx
        y0, y1 = y0 - pady, y1 + pady

        def px(x):
            return ml + (x - x0) / (x1 - x0) * pw

        def py(y):
            if self.logy:
                y = math.log10(y) if y > 0 else y0
            return mt + ph - (y - y0) / (y1 - y0) * ph

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
               f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
               f'<rect width="{self.width}" height="{self.height}" fill="white"/>']
        if self.title:
            out.append(f'<text x="{self.width // 2}" y="20" text-anchor="middle" '
                       f'{_FONT} font-size="15">{escape(self.title)}</text>')
        # frame
        out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" '
                   f'fill="none" stroke="#333" stroke-width="1"/>')
        for t in _nice_ticks(x0, x1):
            X = px(t)
            out.append(f'<line x1="{_f(X)}" y1="{mt + ph}" x2="{_f(X)}" '
                       f'y2="{mt + ph + 4}" stroke="#333"/>')
            out.append(f'<text x="{_f(X)}" y="{mt + ph + 17}" text-anchor="middle" '
                       f'{_FONT} font-size="11">{_tick_label(t)}</text>')
        for t in _nice_ticks(y0, y1):
            Y = mt + ph - (t - y0) / (y1 - y0) * ph
            label = _tick_label(10 ** t) if self.logy else _tick_label(t)
            out.append(f'<line x1="{ml - 4}" y1="{_f(Y)}" x2="{ml}" '
                       f'y2="{_f(Y)}" stroke="#333"/>')
            out.append(f'<text x="{ml - 7}" y="{_f(Y + 4)}" text-anchor="end" '
                       f'{_FONT} font-size="11">{label}</text>')
        if self.xlabel:
            out.append(f'<text x="{ml + pw // 2}" y="{self.height - 10}" '
                       f'text-anchor="middle" {_FONT} font-size="13">'
                       f'{escape(self.xlabel)}</text>')
        if self.ylabel:
            cy = mt + ph // 2
            out.append(f'<text x="16" y="{cy}" text-anchor="middle" {_FONT} '
                       f'font-size="13" transform="rotate(-90 16 {cy})">'
                       f'{escape(self.ylabel)}</text>')
        for x, label in self.vlines:
            X = px(x)
            out.append(f'<line x1="{_f(X)}" y1="{mt}" x2="{_f(X)}" y2="{mt + ph}" '
                       f'stroke="#999" stroke-dasharray="5,4"/>')
            if label:
                out.append(f'<text x="{_f(X + 4)}" y="{mt + 14}" {_FONT} '
                           f'font-size="11" fill="#555">{escape(label)}</text>')
        for y, label in self.hlines:
            Y = py(y)
            out.append(f'<line x1="{ml}" y1="{_f(Y)}" x2="{ml + pw}" y2="{_f(Y)}" '
                       f'stroke="#999" stroke-dasharray="5,4"/>')
            if label:
                out.append(f'<text x="{ml + 6}" y="{_f(Y - 5)}" {_FONT} '
                           f'font-size="11" fill="#555">{escape(label)}</text>')
        for i, (name, sx, sy, markers, color) in enumerate(self.series):
            c = color or PALETTE[i % len(PALETTE)]
            if markers:
                for X, Y in zip(sx, sy):
                    out.append(f'<circle cx="{_f(px(X))}" cy="{_f(py(Y))}" '
                               f'r="3.2" fill="{c}"/>')
            else:
                pts = " ".join(f"{_f(px(X))},{_f(py(Y))}" for X, Y in zip(sx, sy))
                out.append(f'<polyline points="{pts}" fill="none" stroke="{c}" '
                           f'stroke-width="1.8"/>')
        for i, (name, _, _, markers, color) in enumerate(self.series):
            c = color or PALETTE[i % len(PALETTE)]
            Y = mt + 14 + 16 * i
            X = ml + pw - 150
            if markers:
                out.append(f'<circle cx="{X + 9}" cy="{Y - 4}" r="3.2" fill="{c}"/>')
            else:
                out.append(f'<line x1="{X}" y1="{Y - 4}" x2="{X + 18}" '
                           f'y2="{Y - 4}" stroke="{c}" stroke-width="2"/>')
            out.append(f'<text x="{X + 24}" y="{Y}" {_FONT} font-size="11">'
                       f'{escape(name)}</text>')
        for x, y, text in self.annotations:
            out.append(f'<text x="{_f(px(x) + 5)}" y="{_f(py(y) - 5)}" {_FONT} '
                       f'font-size="11" fill="#333">{escape(text)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _diverging_color(v: float) -> str:
    """Blue (negative) -> white (zero) -> red (positive), v in [-1, 1]."""
    v = max(-1.0, min(1.0, v))
    if v < 0:
        r, g, b = int(255 * (1 + v)), int(255 * (1 + v)), 255
    else:
        r, g, b = 255, int(255 * (1 - v)), int(255 * (1 - v))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(x, y, z, title="", xlabel="", ylabel="",
                width=560, height=500) -> str:
    """Cell grid colored on a symmetric diverging scale around zero.

    z has shape (len(y), len(x)); non-finite cells render dark gray.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    ml, mr, mt, mb = 62, 16, 36, 48
    pw, ph = width - ml - mr, height - mt - mb
    finite = z[np.isfinite(z)]
    vmax = float(np.max(np.abs(finite))) if finite.size else 1.0
    vmax = vmax or 1.0
    cw, ch = pw / len(x), ph / len(y)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width // 2}" y="20" text-anchor="middle" {_FONT} '
                   f'font-size="15">{escape(title)}</text>')
    for j in range(len(y)):
        for i in range(len(x)):
            v = z[j, i]
            color = "#555555" if not np.isfinite(v) else _diverging_color(v / vmax)
            X = ml + i * cw
            Y = mt + ph - (j + 1) * ch
            out.append(f'<rect x="{_f(X)}" y="{_f(Y)}" width="{_f(cw + 0.5)}" '
                       f'height="{_f(ch + 0.5)}" fill="{color}"/>')
    out.append(f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" '
               f'fill="none" stroke="#333"/>')
    for i in range(0, len(x), max(1, len(x) // 6)):
        X = ml + (i + 0.5) * cw
        out.append(f'<text x="{_f(X)}" y="{mt + ph + 17}" text-anchor="middle" '
                   f'{_FONT} font-size="11">{x[i]:g}</text>')
    for j in range(0, len(y), max(1, len(y) // 6)):
        Y = mt + ph - (j + 0.5) * ch
        out.append(f'<text x="{ml - 7}" y="{_f(Y + 4)}" text-anchor="end" '
                   f'{_FONT} font-size="11">{y[j]:g}</text>')
    if xlabel:
        out.append(f'<text x="{ml + pw // 2}" y="{height - 10}" '
                   f'text-anchor="middle" {_FONT} font-size="13">'
                   f'{escape(xlabel)}</text>')
    if ylabel:
        cy = mt + ph // 2
        out.append(f'<text x="16" y="{cy}" text-anchor="middle" {_FONT} '
                   f'font-size="13" transform="rotate(-90 16 {cy})">'
                   f'{escape(ylabel)}</text>')
    out.append(f'<text x="{ml}" y="{mt - 6}" {_FONT} font-size="11" fill="#555">'
               f'scale: -{vmax:.3g} (blue) to +{vmax:.3g} (red), '
               f'gray = non-finite</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def table_svg(headers, rows, title="", width=640) -> str:
    """Simple text table; column widths split evenly."""
    rows = [[str(c) for c in r] for r in rows]
    headers = [str(h) for h in headers]
    rh = 24
    mt = 40 if title else 12
    height = mt + rh * (len(rows) + 1) + 12
    ncol = len(headers)
    cw = (width - 24) / ncol
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    if title:
        out.append(f'<text x="{width // 2}" y="22" text-anchor="middle" {_FONT} '
                   f'font-size="15">{escape(title)}</text>')
    y = mt + rh - 8
    for i, h in enumerate(headers):
        out.append(f'<text x="{_f(12 + i * cw)}" y="{y}" {_FONT} font-size="12" '
                   f'font-weight="bold">{escape(h)}</text>')
    out.append(f'<line x1="12" y1="{mt + rh - 2}" x2="{width - 12}" '
               f'y2="{mt + rh - 2}" stroke="#333"/>')
    for r, row in enumerate(rows):
        y = mt + rh * (r + 2) - 8
        for i, cell in enumerate(row):
            out.append(f'<text x="{_f(12 + i * cw)}" y="{y}" {_FONT} '
                       f'font-size="12">{escape(cell)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
