"""Static SVG line charts of cumulative regret."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

MAX_POINTS = 2000
WIDTH, HEIGHT = 760, 460
MARGIN = dict(left=80, right=170, top=30, bottom=60)
PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def downsample(t: np.ndarray, y: np.ndarray, max_points: int = MAX_POINTS) -> tuple[np.ndarray, np.ndarray]:
    """Evenly spaced subset of at most ``max_points`` points, endpoints kept."""
    n = len(t)
    if n <= max_points:
        return np.asarray(t), np.asarray(y)
    idx = np.unique(np.round(np.linspace(0, n - 1, max_points)).astype(int))
    return np.asarray(t)[idx], np.asarray(y)[idx]


def _nice_ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + step * 1e-9, step)


def _fmt(v: float) -> str:
    if abs(v) >= 1e4:
        return f"{v:.0e}".replace("e+0", "e")
    return f"{v:g}"


def emit_regret_chart(traces, path, labels=None, title: str = "Cumulative regret") -> Path:
    """Write one polyline per trace.

    ``traces`` are objects with ``rounds``, ``cum_regret`` and ``algorithm``
    attributes (``RegretTrace`` or a trace read back from CSV).
    """
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace to chart")
    labels = list(labels) if labels is not None else [tr.algorithm or f"trace {i}" for i, tr in enumerate(traces)]
    series = [downsample(np.asarray(tr.rounds, float), np.asarray(tr.cum_regret, float)) for tr in traces]

    x_hi = max(float(s[0].max()) for s in series)
    y_lo = min(0.0, min(float(s[1].min()) for s in series))
    y_hi = max(float(s[1].max()) for s in series)
    if y_hi <= y_lo:
        y_hi = y_lo + 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(v):
        return MARGIN["left"] + pw * v / x_hi

    def sy(v):
        return MARGIN["top"] + ph * (1.0 - (v - y_lo) / (y_hi - y_lo))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>']
    x0, y0 = MARGIN["left"], MARGIN["top"] + ph
    out.append(f'<line class="axis" x1="{x0}" y1="{y0}" x2="{x0 + pw}" y2="{y0}" stroke="black"/>')
    out.append(f'<line class="axis" x1="{x0}" y1="{MARGIN["top"]}" x2="{x0}" y2="{y0}" stroke="black"/>')
    for v in _nice_ticks(0.0, x_hi):
        out.append(f'<line x1="{sx(v):.1f}" y1="{y0}" x2="{sx(v):.1f}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(v):.1f}" y="{y0 + 18}" text-anchor="middle">{_fmt(v)}</text>')
    for v in _nice_ticks(y_lo, y_hi):
        out.append(f'<line x1="{x0 - 5}" y1="{sy(v):.1f}" x2="{x0}" y2="{sy(v):.1f}" stroke="black"/>')
        out.append(f'<text x="{x0 - 8}" y="{sy(v) + 4:.1f}" text-anchor="end">{_fmt(v)}</text>')
    out.append(f'<text class="xlabel" x="{x0 + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">round t</text>')
    out.append(f'<text class="ylabel" x="18" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MARGIN["top"] + ph / 2:.1f})">cumulative regret</text>')

    for i, ((t, y), label) in enumerate(zip(series, labels)):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(t, y))
        out.append(f'<polyline data-label="{escape(label)}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 10 + 20 * i
        lx = WIDTH - MARGIN["right"] + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 24}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text class="legend" x="{lx + 30}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path
