"""Minimal SVG step plots for survival curves: step lines plus confidence bands.

Publication-grade rendering belongs to external tools fed by the CSV
exports; this exists so a curve set can be eyeballed without any plotting
dependency.
"""

from __future__ import annotations

from typing import Mapping

from .core import SurvivalCurve

_WIDTH, _HEIGHT = 640, 420
_MARGIN = 50
_COLORS = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b")


def _step_points(times, values, t_max, sx, sy):
    pts = [(sx(0.0), sy(1.0))]
    prev = 1.0
    for t, v in zip(times, values):
        pts.append((sx(t), sy(prev)))
        pts.append((sx(t), sy(v)))
        prev = v
    pts.append((sx(t_max), sy(prev)))
    return pts


def _polyline(points, color, width=1.5, opacity=1.0, fill="none"):
    coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    tag = "polygon" if fill != "none" else "polyline"
    return (
        f'<{tag} points="{coords}" fill="{fill}" stroke="{color}" '
        f'stroke-width="{width}" opacity="{opacity}" />'
    )


def write_curves_svg(path, curves: Mapping[str, SurvivalCurve], title: str = "") -> None:
    """Write one SVG with a step line (and band, when bounds exist) per curve."""
    t_max = max((float(c.times[-1]) for c in curves.values() if len(c)), default=1.0)
    t_max = t_max if t_max > 0 else 1.0
    x0, x1 = _MARGIN, _WIDTH - _MARGIN
    y0, y1 = _HEIGHT - _MARGIN, _MARGIN

    def sx(t):
        return x0 + (x1 - x0) * t / t_max

    def sy(s):
        return y0 + (y1 - y0) * s

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white" />',
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black" />',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black" />',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        xt, yt = sx(frac * t_max), sy(frac)
        parts.append(
            f'<text x="{xt:.1f}" y="{y0 + 18}" font-size="11" text-anchor="middle">'
            f"{frac * t_max:g}</text>"
        )
        parts.append(
            f'<text x="{x0 - 8}" y="{yt + 4:.1f}" font-size="11" text-anchor="end">'
            f"{frac:g}</text>"
        )
    if title:
        parts.append(
            f'<text x="{_WIDTH / 2}" y="24" font-size="14" text-anchor="middle">{title}</text>'
        )

    for i, group in enumerate(curves):
        curve = curves[group]
        color = _COLORS[i % len(_COLORS)]
        if len(curve) and curve.ci_lower is not None and curve.ci_upper is not None:
            upper = _step_points(curve.times, curve.ci_upper, t_max, sx, sy)
            lower = _step_points(curve.times, curve.ci_lower, t_max, sx, sy)
            parts.append(_polyline(upper + lower[::-1], color, 0.0, 0.2, fill=color))
        parts.append(_polyline(_step_points(curve.times, curve.survival, t_max, sx, sy), color))
        parts.append(
            f'<text x="{x1 - 140}" y="{y1 + 16 * i + 4}" font-size="12" fill="{color}">'
            f"{group}</text>"
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
