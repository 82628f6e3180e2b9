"""Minimal SVG line-chart writer (polylines, axes, legend).

Output is a pure function of the inputs: coordinates are printed with a
fixed number of decimals so repeated runs produce identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    xs: list[float]
    ys: list[float]
    band_lo: list[float] | None = None
    band_hi: list[float] | None = None


@dataclass
class Chart:
    title: str
    xlabel: str
    ylabel: str
    series: list[Series] = field(default_factory=list)
    log_y: bool = False
    width: int = 640
    height: int = 420

    def add(self, series: Series) -> None:
        if len(series.xs) != len(series.ys):
            raise ValueError("xs and ys differ in length")
        self.series.append(series)


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ty(v: float, log_y: bool) -> float:
    if log_y:
        # non-positive values cannot sit on a log axis; pin them to a floor
        return math.log10(max(v, 1e-300))
    return v


def render(chart: Chart) -> str:
    left, right, top, bottom = 70, 150, 40, 50
    pw, ph = chart.width - left - right, chart.height - top - bottom
    xs = [x for s in chart.series for x in s.xs]
    ys = []
    for s in chart.series:
        ys += s.ys + (s.band_lo or []) + (s.band_hi or [])
    ys = [_ty(y, chart.log_y) for y in ys if math.isfinite(y) and (y > 0 or not chart.log_y)]
    if not xs or not ys:
        raise ValueError("nothing to plot")
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 1, y1 + 1

    def px(x):
        return left + (x - x0) / (x1 - x0) * pw

    def py(y):
        return top + ph - (_ty(y, chart.log_y) - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{chart.width}" height="{chart.height}" '
        f'font-family="sans-serif" font-size="12">',
        f'<rect width="{chart.width}" height="{chart.height}" fill="white"/>',
        f'<text x="{chart.width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(chart.title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for k in range(5):
        fx = x0 + (x1 - x0) * k / 4
        fy = y0 + (y1 - y0) * k / 4
        ylab = f"{10 ** fy:.3g}" if chart.log_y else f"{fy:.3g}"
        out.append(f'<text x="{_fmt(px(fx))}" y="{top + ph + 16}" text-anchor="middle">{fx:.3g}</text>')
        ypix = top + ph - k / 4 * ph
        out.append(f'<text x="{left - 6}" y="{_fmt(ypix + 4)}" text-anchor="end">{ylab}</text>')
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{chart.height - 10}" text-anchor="middle">{escape(chart.xlabel)}</text>'
    )
    out.append(
        f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {top + ph / 2:.1f})">{escape(chart.ylabel)}</text>'
    )
    for i, s in enumerate(chart.series):
        color = PALETTE[i % len(PALETTE)]
        if s.band_lo is not None and s.band_hi is not None:
            pts = [(px(x), py(y)) for x, y in zip(s.xs, s.band_hi)]
            pts += [(px(x), py(y)) for x, y in reversed(list(zip(s.xs, s.band_lo)))]
            poly = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts)
            out.append(f'<polygon points="{poly}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        line = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(s.xs, s.ys))
        out.append(f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>')
        ly = top + 10 + 18 * i
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{left + pw + 36}" y="{ly + 4}">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write(chart: Chart, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render(chart))
