"""Minimal static SVG plots: log-frequency x axis, dB y axis, polylines."""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


@dataclass
class Curve:
    freqs: np.ndarray
    levels: np.ndarray
    label: str = ""
    color: str | None = None
    dashed: bool = False
    width: float = 1.5


def _freq_label(f: float) -> str:
    for scale, unit in ((1e9, "GHz"), (1e6, "MHz"), (1e3, "kHz")):
        if f >= scale:
            return f"{f / scale:g} {unit}"
    return f"{f:g} Hz"


def _nice_step(span: float) -> float:
    raw = span / 8
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        if raw <= m * mag:
            return m * mag
    return 10 * mag


def psd_plot_svg(
    curves: list[Curve],
    boundaries: list[float] = (),
    title: str = "",
    width: int = 760,
    height: int = 480,
    ylabel: str = "L(Δf) [dBc/Hz]",
) -> str:
    """Render curves on a semilog-x grid; ``boundaries`` become dashed verticals."""
    margin_l, margin_r, margin_t, margin_b = 70, 20, 36, 56
    pw, ph = width - margin_l - margin_r, height - margin_t - margin_b

    fx = np.concatenate([np.asarray(c.freqs, float) for c in curves])
    fy = np.concatenate([np.asarray(c.levels, float) for c in curves])
    keep = np.isfinite(fy) & (fx > 0)
    fx, fy = fx[keep], fy[keep]
    x_lo = math.floor(math.log10(fx.min()))
    x_hi = math.ceil(math.log10(fx.max()))
    if x_hi == x_lo:
        x_hi += 1
    step = _nice_step(max(fy.max() - fy.min(), 1.0))
    y_lo = step * math.floor(fy.min() / step)
    y_hi = step * math.ceil(fy.max() / step)
    if y_hi == y_lo:
        y_hi += step

    def px(f):
        return margin_l + (np.log10(f) - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return margin_t + (y_hi - np.asarray(v, float)) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    # grid and ticks
    for k in range(x_lo, x_hi + 1):
        x = px(10.0 ** k)
        out.append(f'<line x1="{x:.2f}" y1="{margin_t}" x2="{x:.2f}" y2="{margin_t + ph}" stroke="#ccc"/>')
        out.append(
            f'<text x="{x:.2f}" y="{margin_t + ph + 16}" text-anchor="middle">'
            f"{escape(_freq_label(10.0 ** k))}</text>"
        )
        if k < x_hi:
            for m in range(2, 10):
                xm = px(m * 10.0 ** k)
                out.append(
                    f'<line x1="{xm:.2f}" y1="{margin_t}" x2="{xm:.2f}" y2="{margin_t + ph}" '
                    f'stroke="#eee"/>'
                )
    n_y = int(round((y_hi - y_lo) / step))
    for i in range(n_y + 1):
        v = y_lo + i * step
        y = py(v)
        out.append(f'<line x1="{margin_l}" y1="{y:.2f}" x2="{margin_l + pw}" y2="{y:.2f}" stroke="#ccc"/>')
        out.append(f'<text x="{margin_l - 6}" y="{y + 4:.2f}" text-anchor="end">{v:g}</text>')
    out.append(
        f'<rect x="{margin_l}" y="{margin_t}" width="{pw}" height="{ph}" fill="none" stroke="black"/>'
    )

    for f in boundaries:
        if fx.min() <= f <= fx.max():
            x = px(f)
            out.append(
                f'<line x1="{x:.2f}" y1="{margin_t}" x2="{x:.2f}" y2="{margin_t + ph}" '
                f'stroke="#555" stroke-dasharray="5,4"/>'
            )

    for i, c in enumerate(curves):
        f = np.asarray(c.freqs, float)
        v = np.asarray(c.levels, float)
        ok = np.isfinite(v) & (f > 0)
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(f[ok]), py(v[ok])))
        color = c.color or PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="6,3"' if c.dashed else ""
        out.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="{c.width}"{dash}/>'
        )

    # legend
    ly = margin_t + 14
    for i, c in enumerate(curves):
        if not c.label:
            continue
        color = c.color or PALETTE[i % len(PALETTE)]
        dash = ' stroke-dasharray="6,3"' if c.dashed else ""
        lx = margin_l + pw - 190
        out.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" stroke="{color}" '
            f'stroke-width="2"{dash}/>'
        )
        out.append(f'<text x="{lx + 30}" y="{ly}">{escape(c.label)}</text>')
        ly += 16

    out.append(
        f'<text x="{margin_l + pw / 2:.1f}" y="{height - 14}" text-anchor="middle">'
        "Offset frequency Δf</text>"
    )
    out.append(
        f'<text x="16" y="{margin_t + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {margin_t + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    if title:
        out.append(
            f'<text x="{width / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
