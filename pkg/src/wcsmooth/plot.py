"""Static SVG convergence plots with a logarithmic y axis."""
from __future__ import annotations

import math
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
WIDTH, HEIGHT = 720, 440
LEFT, RIGHT, TOP, BOTTOM = 70, 170, 40, 50


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _positive(points):
    return [(float(x), float(y)) for x, y in points if math.isfinite(x) and math.isfinite(y) and y > 0]


def line_chart_svg(series, title: str = "", xlabel: str = "iteration", ylabel: str = "f(x)") -> str:
    """Render ``series = [(label, [(x, y), ...]), ...]`` as one polyline each.

    Non-positive or non-finite ``y`` values are dropped (log scale).
    """
    cleaned = [(str(label), _positive(pts)) for label, pts in series]
    xs = [x for _, pts in cleaned for x, _ in pts]
    ys = [y for _, pts in cleaned for _, y in pts]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    ly0, ly1 = (math.floor(math.log10(min(ys))), math.ceil(math.log10(max(ys)))) if ys else (0, 1)
    if ly1 == ly0:
        ly1 = ly0 + 1
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(x):
        return LEFT + (x - x0) / (x1 - x0) * pw

    def py(y):
        return TOP + (ly1 - math.log10(y)) / (ly1 - ly0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for e in range(ly0, ly1 + 1):
        y = _fmt(py(10.0**e))
        out.append(f'<line x1="{LEFT}" y1="{y}" x2="{LEFT + pw}" y2="{y}" stroke="#dddddd"/>')
        out.append(f'<text x="{LEFT - 6}" y="{y}" text-anchor="end" font-size="11">1e{e}</text>')
    for i in range(5):
        xv = x0 + i * (x1 - x0) / 4
        out.append(f'<text x="{_fmt(px(xv))}" y="{TOP + ph + 16}" text-anchor="middle" '
                   f'font-size="11">{xv:.4g}</text>')
    out.append(f'<text x="{LEFT + pw / 2:.1f}" y="{HEIGHT - 10}" text-anchor="middle" '
               f'font-size="12">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{TOP + ph / 2:.1f}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 16 {TOP + ph / 2:.1f})">{escape(ylabel)}</text>')
    for i, (label, pts) in enumerate(cleaned):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}">'
                   f"<title>{escape(label)}</title></polyline>")
        ly = TOP + 14 + 18 * i
        out.append(f'<line x1="{LEFT + pw + 12}" y1="{ly}" x2="{LEFT + pw + 32}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{LEFT + pw + 38}" y="{ly + 4}" font-size="11" '
                   f'data-series={quoteattr(label)}>{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_line_chart(path, series, **kw) -> Path:
    path = Path(path)
    path.write_text(line_chart_svg(series, **kw))
    return path


def trace_series(label: str, trace, x: str = "k", y: str = "f_true"):
    return label, list(zip(trace.column(x), trace.column(y)))
