"""Minimal SVG line charts for throughput trajectories (no plotting dependency)."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, Sequence
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
DASHES = ("", "6,4", "2,3")


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    return np.arange(np.ceil(lo / step) * step, hi + 0.5 * step, step)


def line_chart(series: Dict[str, Sequence[float]], title: str = "", xlabel: str = "frame",
               ylabel: str = "throughput", width: int = 720, height: int = 440) -> str:
    """Render named ``y`` series against ``1..n`` as an SVG document.

    Series whose label ends in ``(<policy>)`` share a dash style per policy,
    so two policies for the same UE are distinguishable without colour.
    """
    left, right, top, bottom = 60, 150, 30, 45
    pw, ph = width - left - right, height - top - bottom
    n = max((len(v) for v in series.values()), default=1)
    ymax = max((float(np.max(v)) for v in series.values() if len(v)), default=1.0)
    yt = _ticks(0.0, ymax)
    ytop = float(yt[-1]) if len(yt) else 1.0
    xt = _ticks(1.0, float(max(n, 2)))

    def sx(x):
        return left + pw * (x - 1) / max(n - 1, 1)

    def sy(y):
        return top + ph * (1 - y / ytop)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{left + pw / 2}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for y in yt:
        out.append(f'<line x1="{left - 4}" y1="{sy(y):.1f}" x2="{left + pw}" y2="{sy(y):.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{left - 6}" y="{sy(y) + 4:.1f}" text-anchor="end">{y:g}</text>')
    for x in xt:
        if 1 <= x <= n:
            out.append(f'<text x="{sx(x):.1f}" y="{top + ph + 15}" text-anchor="middle">{x:g}</text>')
    out.append(f'<text x="{left + pw / 2}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{top + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2})">{escape(ylabel)}</text>')

    groups, names = [], []
    for i, (label, values) in enumerate(series.items()):
        name, _, group = label.rpartition(" (") if label.endswith(")") else (label, "", "")
        for seen, key in ((groups, group), (names, name)):
            if key not in seen:
                seen.append(key)
        colour = PALETTE[names.index(name) % len(PALETTE)]
        dash = DASHES[groups.index(group) % len(DASHES)]
        values = np.asarray(values, dtype=float)
        # thin long trajectories to at most ~1000 points
        idx = np.unique(np.linspace(0, len(values) - 1, min(len(values), 1000)).astype(int))
        pts = " ".join(f"{sx(j + 1):.1f},{sy(values[j]):.2f}" for j in idx)
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash_attr} points="{pts}"/>')
        ly = top + 14 * i + 6
        out.append(f'<line x1="{left + pw + 10}" y1="{ly}" x2="{left + pw + 30}" y2="{ly}" '
                   f'stroke="{colour}" stroke-width="1.5"{dash_attr}/>')
        out.append(f'<text x="{left + pw + 34}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_trajectories(results, path, title: str = "") -> Path:
    """One line per (UE, policy) from ``RunResult`` objects."""
    series = {}
    for res in results:
        for i in range(res.num_ues):
            series[f"UE {i + 1} ({res.policy})"] = res.throughput[:, i]
    path = Path(path)
    path.write_text(line_chart(series, title=title), encoding="utf-8")
    return path
