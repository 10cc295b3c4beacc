"""Deterministic SVG line plots and heatmaps.

Coordinates are written with fixed precision and elements in a fixed
order, so identical inputs produce byte-identical files.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=130, top=40, bottom=60)
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#7f7f7f", "#9467bd", "#ff7f0e")
EMPTY_FILL = "#000000"
SUBDIV = 3


def _f(v: float) -> str:
    return f"{v:.2f}"


def _nice(v: float) -> str:
    return f"{v:.3g}"


def _scale(lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (np.asarray(v, dtype=float) - lo) / span * (b - a)


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
        f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]


def _ticks(n: int, lo: float, hi: float) -> list[float]:
    return list(np.linspace(lo, hi, n))


def render_line(
    x: np.ndarray,
    curves: Mapping[str, np.ndarray] | np.ndarray,
    path: str | Path | None = None,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "effect",
    tick_positions: Sequence[float] | None = None,
) -> str:
    """Plot one polyline per curve over ``x``.

    Minor ticks mark ``tick_positions`` (the breakpoints by default).
    """
    x = np.asarray(x, dtype=float)
    if not isinstance(curves, Mapping):
        curves = {"effect": np.asarray(curves, dtype=float)}
    if any(np.asarray(c).shape != x.shape for c in curves.values()):
        raise ValueError("every curve must match x in length")
    ys = np.concatenate([np.asarray(c, dtype=float) for c in curves.values()])
    ylo, yhi = float(ys.min()), float(ys.max())
    pad = 0.05 * (yhi - ylo if yhi > ylo else 1.0)
    ylo, yhi = ylo - pad, yhi + pad
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    sx = _scale(x.min(), x.max(), x0, x1)
    sy = _scale(ylo, yhi, y0, y1)
    out = _header(title)
    out.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="#333333"/>')
    ticks = x if tick_positions is None else np.asarray(tick_positions, dtype=float)
    out.append('<g stroke="#999999">')
    for t in ticks:
        px = _f(sx(t))
        out.append(f'<line x1="{px}" y1="{y0}" x2="{px}" y2="{y0 + 4}"/>')
    out.append("</g>")
    for t in _ticks(5, float(x.min()), float(x.max())):
        out.append(f'<text x="{_f(sx(t))}" y="{y0 + 18}" text-anchor="middle">{_nice(t)}</text>')
    for t in _ticks(5, ylo, yhi):
        out.append(f'<text x="{x0 - 6}" y="{_f(sy(t) + 4)}" text-anchor="end">{_nice(t)}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{HEIGHT - 18}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2:.2f})">{escape(ylabel)}</text>'
    )
    for i, (label, c) in enumerate(curves.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(f"{_f(a)},{_f(b)}" for a, b in zip(sx(x), sy(np.asarray(c, dtype=float))))
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN["top"] + 16 * i + 8
        out.append(f'<line x1="{x1 + 10}" y1="{ly}" x2="{x1 + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{x1 + 35}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return _finish(out, path)


def _color(t: float) -> str:
    """Blue-white-red diverging map on ``t`` in [0, 1]; never pure black."""
    t = min(max(t, 0.0), 1.0)
    if t < 0.5:
        u = t / 0.5
        rgb = (40 + 215 * u, 80 + 175 * u, 200 + 55 * u)
    else:
        u = (t - 0.5) / 0.5
        rgb = (255 - 55 * u, 255 - 195 * u, 255 - 215 * u)
    return "#{:02x}{:02x}{:02x}".format(*(int(round(c)) for c in rgb))


def render_heatmap(
    xb: np.ndarray,
    yb: np.ndarray,
    lattice: np.ndarray,
    empty: np.ndarray | None = None,
    path: str | Path | None = None,
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
) -> str:
    """Shade each cell by bilinear interpolation of its four corner values.

    ``lattice`` has shape ``(len(xb), len(yb))``; ``empty`` (cells) marks
    cells drawn as black rectangles on top.
    """
    xb, yb = np.asarray(xb, dtype=float), np.asarray(yb, dtype=float)
    lattice = np.asarray(lattice, dtype=float)
    if lattice.shape != (xb.size, yb.size):
        raise ValueError(f"lattice shape {lattice.shape} does not match breakpoints ({xb.size}, {yb.size})")
    vmax = float(np.max(np.abs(lattice))) or 1.0
    x0, x1 = MARGIN["left"], WIDTH - MARGIN["right"]
    y0, y1 = HEIGHT - MARGIN["bottom"], MARGIN["top"]
    sx = _scale(xb[0], xb[-1], x0, x1)
    sy = _scale(yb[0], yb[-1], y0, y1)
    out = _header(title)
    out.append('<g shape-rendering="crispEdges">')
    u = (np.arange(SUBDIV) + 0.5) / SUBDIV
    for k in range(xb.size - 1):
        for m in range(yb.size - 1):
            c00, c10 = lattice[k, m], lattice[k + 1, m]
            c01, c11 = lattice[k, m + 1], lattice[k + 1, m + 1]
            for a in range(SUBDIV):
                for b in range(SUBDIV):
                    val = (c00 * (1 - u[a]) * (1 - u[b]) + c10 * u[a] * (1 - u[b])
                           + c01 * (1 - u[a]) * u[b] + c11 * u[a] * u[b])
                    xa = xb[k] + (xb[k + 1] - xb[k]) * a / SUBDIV
                    xe = xb[k] + (xb[k + 1] - xb[k]) * (a + 1) / SUBDIV
                    ya = yb[m] + (yb[m + 1] - yb[m]) * b / SUBDIV
                    ye = yb[m] + (yb[m + 1] - yb[m]) * (b + 1) / SUBDIV
                    px, py = float(sx(xa)), float(sy(ye))
                    out.append(
                        f'<rect x="{_f(px)}" y="{_f(py)}" width="{_f(float(sx(xe)) - px)}" '
                        f'height="{_f(float(sy(ya)) - py)}" fill="{_color(0.5 + 0.5 * val / vmax)}"/>'
                    )
    out.append("</g>")
    if empty is not None:
        empty = np.asarray(empty, dtype=bool)
        if empty.shape != (xb.size - 1, yb.size - 1):
            raise ValueError("empty mask must have one entry per cell")
        out.append('<g class="empty-cells">')
        for k, m in zip(*np.nonzero(empty)):
            px, py = float(sx(xb[k])), float(sy(yb[m + 1]))
            out.append(
                f'<rect x="{_f(px)}" y="{_f(py)}" width="{_f(float(sx(xb[k + 1])) - px)}" '
                f'height="{_f(float(sy(yb[m])) - py)}" fill="{EMPTY_FILL}"/>'
            )
        out.append("</g>")
    out.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" fill="none" stroke="#333333"/>')
    for t in _ticks(5, float(xb[0]), float(xb[-1])):
        out.append(f'<text x="{_f(sx(t))}" y="{y0 + 18}" text-anchor="middle">{_nice(t)}</text>')
    for t in _ticks(5, float(yb[0]), float(yb[-1])):
        out.append(f'<text x="{x0 - 6}" y="{_f(sy(t) + 4)}" text-anchor="end">{_nice(t)}</text>')
    out.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{HEIGHT - 18}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="18" y="{(y0 + y1) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(y0 + y1) / 2:.2f})">{escape(ylabel)}</text>'
    )
    # colorbar
    bx, bw, steps = x1 + 30, 16, 64
    h = (y0 - y1) / steps
    out.append('<g class="colorbar" shape-rendering="crispEdges">')
    for s in range(steps):
        t = (s + 0.5) / steps
        out.append(f'<rect x="{bx}" y="{_f(y0 - (s + 1) * h)}" width="{bw}" height="{_f(h)}" fill="{_color(t)}"/>')
    out.append("</g>")
    for t, label in ((0.0, -vmax), (0.5, 0.0), (1.0, vmax)):
        out.append(f'<text x="{bx + bw + 4}" y="{_f(y0 - t * (y0 - y1) + 4)}">{_nice(label)}</text>')
    out.append("</svg>")
    return _finish(out, path)


def _finish(lines: list[str], path) -> str:
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def render_output(values, kind: str, path: str | Path | None = None, title: str = "") -> str:
    """Render an effect object or raw lattice.

    ``kind="line"`` takes an :class:`~alefx.first.EffectCurve` or a pair
    ``(x, y)``; ``kind="heatmap"`` takes an
    :class:`~alefx.second.EffectSurface`, a two-feature
    :class:`~alefx.higher.EffectGrid`, or ``(xb, yb, lattice[, empty])``.
    """
    if kind == "line":
        if hasattr(values, "centered") and hasattr(values, "breakpoints") and np.ndim(values.centered) == 1:
            return render_line(values.breakpoints, {"ALE": values.centered}, path,
                               title or f"ALE main effect of {values.name}", xlabel=values.name)
        if isinstance(values, tuple) and len(values) == 2 and np.ndim(values[1]) == 1:
            return render_line(values[0], values[1], path, title)
        raise ValueError("line plots need a one-dimensional effect")
    if kind == "heatmap":
        if hasattr(values, "centered") and np.ndim(values.centered) == 2:
            xb, yb = values.breakpoints
            return render_heatmap(xb, yb, values.centered, values.empty, path,
                                  title or "ALE second-order effect", *values.names)
        if hasattr(values, "values") and hasattr(values, "breakpoints") and np.ndim(values.values) == 2:
            xb, yb = values.breakpoints
            return render_heatmap(xb, yb, values.values, values.empty, path, title, *values.names)
        if isinstance(values, tuple) and len(values) in (3, 4) and np.ndim(values[2]) == 2:
            return render_heatmap(*values[:3], values[3] if len(values) == 4 else None, path, title)
        raise ValueError("heatmaps need a two-dimensional effect")
    raise ValueError(f"unknown plot kind {kind!r}")
