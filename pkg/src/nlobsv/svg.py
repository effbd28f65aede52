"""Minimal self-contained SVG plotting: stacked panels of lines and scatters."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from html import escape
from pathlib import Path

import numpy as np

MAX_LINE_POINTS = 1500


def nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / max(count, 1)
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.4g}"


@dataclass
class Panel:
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    layers: list = field(default_factory=list)
    xlim: tuple | None = None
    ylim: tuple | None = None

    def line(self, x, y, label="", color="#1f77b4", width=1.5, dash=None):
        x, y = np.asarray(x, float), np.asarray(y, float)
        if x.size > MAX_LINE_POINTS:
            stride = int(math.ceil(x.size / MAX_LINE_POINTS))
            keep = np.r_[0:x.size:stride, x.size - 1]
            x, y = x[keep], y[keep]
        self.layers.append(("line", x, y, label, color, width, dash))
        return self

    def scatter(self, x, y, label="", color="#1f77b4", radius=1.2, hollow=False):
        self.layers.append(("scatter", np.asarray(x, float), np.asarray(y, float),
                            label, color, radius, hollow))
        return self

    def hline(self, y, label="", color="black", width=1.0):
        self.layers.append(("hline", None, float(y), label, color, width, None))
        return self

    def bounds(self):
        xs, ys = [], []
        for kind, x, y, *_ in self.layers:
            if kind == "hline":
                ys.append(np.array([y]))
                continue
            ok = np.isfinite(x) & np.isfinite(y)
            xs.append(x[ok])
            ys.append(y[ok])
        xs = np.concatenate(xs) if xs else np.array([0.0, 1.0])
        ys = np.concatenate(ys) if ys else np.array([0.0, 1.0])
        x0, x1 = self.xlim or (float(xs.min()), float(xs.max()))
        y0, y1 = self.ylim or (float(ys.min()), float(ys.max()))
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            pad = 0.5 if y0 == 0 else abs(y0) * 0.1
            y0, y1 = y0 - pad, y1 + pad
        if self.ylim is None:
            pad = 0.05 * (y1 - y0)
            y0, y1 = y0 - pad, y1 + pad
        return x0, x1, y0, y1


def render(panels: list[Panel], width: int = 720, panel_height: int = 300) -> str:
    ml, mr, mt, mb = 70, 20, 30, 45
    height = panel_height * len(panels)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>']
    for k, panel in enumerate(panels):
        oy = k * panel_height
        pw, ph = width - ml - mr, panel_height - mt - mb
        x0, x1, y0, y1 = panel.bounds()
        sx = lambda v: ml + (v - x0) / (x1 - x0) * pw
        sy = lambda v: oy + mt + ph - (v - y0) / (y1 - y0) * ph
        clip = f"clip{k}"
        out.append(f'<clipPath id="{clip}"><rect x="{ml}" y="{oy + mt}" width="{pw}" height="{ph}"/></clipPath>')
        out.append(f'<rect x="{ml}" y="{oy + mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>')
        for t in nice_ticks(x0, x1):
            X = sx(t)
            out.append(f'<line x1="{X:.2f}" y1="{oy + mt + ph}" x2="{X:.2f}" y2="{oy + mt + ph + 4}" stroke="#333"/>')
            out.append(f'<text x="{X:.2f}" y="{oy + mt + ph + 16}" text-anchor="middle">{_fmt(t)}</text>')
        for t in nice_ticks(y0, y1):
            Y = sy(t)
            out.append(f'<line x1="{ml - 4}" y1="{Y:.2f}" x2="{ml}" y2="{Y:.2f}" stroke="#333"/>')
            out.append(f'<text x="{ml - 6}" y="{Y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
        if panel.title:
            out.append(f'<text x="{ml + pw / 2}" y="{oy + mt - 10}" text-anchor="middle" font-size="13">{escape(panel.title)}</text>')
        if panel.xlabel:
            out.append(f'<text x="{ml + pw / 2}" y="{oy + panel_height - 8}" text-anchor="middle">{escape(panel.xlabel)}</text>')
        if panel.ylabel:
            cy = oy + mt + ph / 2
            out.append(f'<text x="14" y="{cy}" text-anchor="middle" transform="rotate(-90 14 {cy})">{escape(panel.ylabel)}</text>')
        out.append(f'<g clip-path="url(#{clip})">')
        for kind, x, y, label, color, size, extra in panel.layers:
            if kind == "line":
                pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y)
                               if math.isfinite(a) and math.isfinite(b))
                dash = f' stroke-dasharray="{extra}"' if extra else ""
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{size}"{dash}/>')
            elif kind == "scatter":
                fill = "none" if extra else color
                for a, b in zip(x, y):
                    if math.isfinite(a) and math.isfinite(b):
                        out.append(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="{size}" fill="{fill}" stroke="{color}" stroke-width="0.6"/>')
            else:
                Y = sy(y)
                out.append(f'<line x1="{ml}" y1="{Y:.2f}" x2="{ml + pw}" y2="{Y:.2f}" stroke="{color}" stroke-width="{size}"/>')
        out.append("</g>")
        labelled = [(layer[3], layer[4]) for layer in panel.layers if layer[3]]
        for j, (label, color) in enumerate(labelled):
            ly = oy + mt + 14 + 14 * j
            out.append(f'<rect x="{ml + pw - 150}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
            out.append(f'<text x="{ml + pw - 135}" y="{ly + 1}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save(panels: list[Panel], path, **kwargs) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render(panels, **kwargs))
    return path
