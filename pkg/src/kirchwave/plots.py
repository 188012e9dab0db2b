"""Minimal deterministic SVG line plots.

Hand-rolled on purpose: byte-identical output for identical input, no
rendering dependency.  One polyline with axes and a handful of ticks is
all the bench needs.
"""

from __future__ import annotations

import math
from pathlib import Path

__all__ = ["emit_svg"]

_W, _H = 720, 480
_ML, _MR, _MT, _MB = 70, 20, 30, 50


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def emit_svg(
    xs,
    ys,
    path: str | Path,
    title: str = "",
    xlabel: str = "t",
    ylabel: str = "",
    log_y: bool = False,
) -> Path:
    """Write a single-series line plot; returns the output path."""
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    if not xs or not ys or len(xs) != len(ys):
        raise ValueError("emit_svg needs one non-empty y per x")
    if log_y:
        floor = max(min((y for y in ys if y > 0), default=1e-300), 1e-300)
        ys = [math.log10(max(y, floor)) for y in ys]
        ylabel = f"log10({ylabel})" if ylabel else "log10"

    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pw = _W - _ML - _MR
    ph = _H - _MT - _MB

    def px(x: float) -> float:
        return _ML + pw * (x - x_lo) / (x_hi - x_lo)

    def py(y: float) -> float:
        return _MT + ph * (1.0 - (y - y_lo) / (y_hi - y_lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<line x1="{_ML}" y1="{_MT + ph}" x2="{_ML + pw}" y2="{_MT + ph}" stroke="black"/>',
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_MT + ph}" stroke="black"/>',
    ]
    for tx in _ticks(x_lo, x_hi):
        x = px(tx)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_MT + ph}" x2="{_fmt(x)}" y2="{_MT + ph + 5}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{_MT + ph + 20}" font-size="12" text-anchor="middle">{_fmt(tx)}</text>'
        )
    for ty in _ticks(y_lo, y_hi):
        y = py(ty)
        parts.append(f'<line x1="{_ML - 5}" y1="{_fmt(y)}" x2="{_ML}" y2="{_fmt(y)}" stroke="black"/>')
        parts.append(
            f'<text x="{_ML - 8}" y="{_fmt(y + 4)}" font-size="12" text-anchor="end">{_fmt(ty)}</text>'
        )
    pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(xs, ys))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="#1f5fbf" stroke-width="1.5"/>')
    if title:
        parts.append(
            f'<text x="{_W / 2:.6g}" y="20" font-size="14" text-anchor="middle">{title}</text>'
        )
    parts.append(
        f'<text x="{_ML + pw / 2:.6g}" y="{_H - 8}" font-size="12" text-anchor="middle">{xlabel}</text>'
    )
    if ylabel:
        parts.append(
            f'<text x="14" y="{_MT + ph / 2:.6g}" font-size="12" text-anchor="middle" '
            f'transform="rotate(-90 14 {_MT + ph / 2:.6g})">{ylabel}</text>'
        )
    parts.append("</svg>")

    path = Path(path)
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")
    return path
