"""Minimal SVG output: line plots and a heatmap, written directly as text."""
from __future__ import annotations

import json
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=40, bottom=50)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]


def _manifest_comment(manifest) -> str:
    body = json.dumps(manifest or {}, sort_keys=True).replace("--", "- -")
    return f"<!-- manifest: {body} -->\n"


def _ticks(lo, hi, n=5):
    if not np.isfinite(lo) or not np.isfinite(hi):
        return []
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


class _Frame:
    def __init__(self, xlim, ylim, log_y=False):
        self.x0, self.x1 = xlim
        self.y0, self.y1 = ylim
        self.log_y = log_y
        self.w = WIDTH - MARGIN["left"] - MARGIN["right"]
        self.h = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def _ty(self, y):
        return np.log10(y) if self.log_y else y

    def px(self, x):
        span = (self.x1 - self.x0) or 1.0
        return MARGIN["left"] + (np.asarray(x) - self.x0) / span * self.w

    def py(self, y):
        lo, hi = self._ty(self.y0), self._ty(self.y1)
        span = (hi - lo) or 1.0
        return MARGIN["top"] + self.h - (self._ty(np.asarray(y)) - lo) / span * self.h

    def axes(self, title, xlabel, ylabel):
        L, T = MARGIN["left"], MARGIN["top"]
        out = [
            f'<rect x="{L}" y="{T}" width="{self.w}" height="{self.h}" fill="none" stroke="#333"/>',
            f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
            f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="13">{escape(xlabel)}</text>',
            f'<text x="16" y="{HEIGHT / 2:.1f}" text-anchor="middle" font-size="13" '
            f'transform="rotate(-90 16 {HEIGHT / 2:.1f})">{escape(ylabel)}</text>',
        ]
        for t in _ticks(self.x0, self.x1):
            x = float(self.px(t))
            out.append(f'<line x1="{x:.1f}" y1="{T + self.h}" x2="{x:.1f}" y2="{T + self.h + 5}" stroke="#333"/>')
            out.append(f'<text x="{x:.1f}" y="{T + self.h + 18}" text-anchor="middle" font-size="11">{t:.3g}</text>')
        if self.log_y:
            yt = 10.0 ** np.arange(np.floor(np.log10(self.y0)), np.ceil(np.log10(self.y1)) + 1)
            yt = [v for v in yt if self.y0 <= v <= self.y1]
        else:
            yt = _ticks(self.y0, self.y1)
        for t in yt:
            y = float(self.py(t))
            out.append(f'<line x1="{L - 5}" y1="{y:.1f}" x2="{L}" y2="{y:.1f}" stroke="#333"/>')
            out.append(f'<text x="{L - 8}" y="{y + 4:.1f}" text-anchor="end" font-size="11">{t:.3g}</text>')
        return out


def _polyline(frame, x, y, color, dashed=False, max_points=2000):
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = np.isfinite(x) & np.isfinite(y)
    if frame.log_y:
        keep &= y > 0
    x, y = x[keep], y[keep]
    if x.size == 0:
        return ""
    if x.size > max_points:
        idx = np.unique(np.linspace(0, x.size - 1, max_points).astype(int))
        x, y = x[idx], y[idx]
    pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(frame.px(x), frame.py(y)))
    dash = ' stroke-dasharray="6,4"' if dashed else ""
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>'


def line_plot(path, series, *, title="", xlabel="", ylabel="", log_y=False, manifest=None):
    """``series``: list of dicts with keys x, y, label and optional dashed."""
    xs = np.concatenate([np.asarray(s["x"], float) for s in series])
    ys = np.concatenate([np.asarray(s["y"], float) for s in series])
    ys = ys[np.isfinite(ys)]
    if log_y:
        ys = ys[ys > 0]
    if ys.size == 0:
        ys = np.array([0.0, 1.0])
    ylo, yhi = float(ys.min()), float(ys.max())
    if not log_y:
        pad = 0.05 * (yhi - ylo or 1.0)
        ylo, yhi = ylo - pad, yhi + pad
    frame = _Frame((float(np.nanmin(xs)), float(np.nanmax(xs))), (ylo, yhi), log_y)
    parts = frame.axes(title, xlabel, ylabel)
    for i, s in enumerate(series):
        color = s.get("color", PALETTE[i % len(PALETTE)])
        parts.append(_polyline(frame, s["x"], s["y"], color, s.get("dashed", False)))
        ly = MARGIN["top"] + 14 + 16 * i
        lx = WIDTH - MARGIN["right"] - 150
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 26}" y="{ly}" font-size="11">{escape(s.get("label", ""))}</text>')
    _write(path, parts, manifest)


def _colormap(v):
    """Map [0, 1] to a blue-to-yellow ramp."""
    v = float(np.clip(v, 0.0, 1.0))
    r = int(round(40 + 215 * v))
    g = int(round(40 + 190 * v))
    b = int(round(140 * (1 - v) + 20))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(path, values, extent, *, title="", xlabel="", ylabel="", overlay=None, manifest=None):
    """``values[i, j]`` is drawn at the i-th x and j-th y cell; ``overlay`` is an optional (x, y) path."""
    values = np.asarray(values, float)
    (x0, x1), (y0, y1) = extent
    frame = _Frame((x0, x1), (y0, y1))
    parts = frame.axes(title, xlabel, ylabel)
    finite = values[np.isfinite(values)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    nx, ny = values.shape
    cw, ch = frame.w / nx, frame.h / ny
    for i in range(nx):
        for j in range(ny):
            v = values[i, j]
            c = _colormap((v - lo) / (hi - lo) if hi > lo else 0.5) if np.isfinite(v) else "#ffffff"
            x = MARGIN["left"] + i * cw
            y = MARGIN["top"] + frame.h - (j + 1) * ch
            parts.append(f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw + 0.3:.2f}" height="{ch + 0.3:.2f}" fill="{c}"/>')
    if overlay is not None:
        parts.append(_polyline(frame, overlay[0], overlay[1], "#d62728"))
    parts.append(
        f'<text x="{WIDTH - MARGIN["right"]}" y="{MARGIN["top"] - 6}" text-anchor="end" font-size="11">'
        f"range {lo:.3g} .. {hi:.3g}</text>"
    )
    _write(path, parts, manifest)


def _write(path, parts, manifest):
    with open(path, "w") as fh:
        fh.write(_manifest_comment(manifest))
        fh.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">\n'
        )
        fh.write('<rect width="100%" height="100%" fill="white"/>\n')
        for p in parts:
            if p:
                fh.write(p + "\n")
        fh.write("</svg>\n")
