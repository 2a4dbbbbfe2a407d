"""Minimal SVG line charts for densities and placements.

Colour/dash conventions: the corrected density is a solid blue line, the
uncorrected one dashed black, preference curves solid orange (before the
first pick) and green (after the last), existing windows grey bands and new
windows red ticks.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 960, 360
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 20, 40

STYLES = {
    "corrected": 'stroke="#1f4fd1" stroke-width="1.6" fill="none"',
    "raw": 'stroke="#000000" stroke-width="1.2" stroke-dasharray="6,4" fill="none"',
    "g_before": 'stroke="#e07b00" stroke-width="1.2" fill="none"',
    "g_after": 'stroke="#2a9d3a" stroke-width="1.2" fill="none"',
}


class Chart:
    def __init__(self, period_hours: float, y_max: float, title: str = ""):
        self.P = period_hours
        self.y_max = y_max if y_max > 0 else 1.0
        self.title = title
        self.items: list[str] = []

    def x(self, t: float) -> float:
        return MARGIN_L + (WIDTH - MARGIN_L - MARGIN_R) * t / self.P

    def y(self, v: float) -> float:
        return HEIGHT - MARGIN_B - (HEIGHT - MARGIN_T - MARGIN_B) * v / self.y_max

    def curve(self, ts, vs, style: str, name: str) -> None:
        pts = " L ".join(f"{self.x(t):.3f},{self.y(v):.3f}" for t, v in zip(ts, vs))
        self.items.append(f'<path id="{name}" d="M {pts}" {STYLES[style]}/>')

    def band(self, lo: float, hi: float) -> None:
        # a wrapped window is drawn as two pieces
        spans = [(lo, hi)] if hi > lo else [(lo, self.P), (0.0, hi)]
        for a, b in spans:
            self.items.append(
                f'<rect x="{self.x(a):.3f}" y="{MARGIN_T}" width="{self.x(b) - self.x(a):.3f}" '
                f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="#999999" fill-opacity="0.25"/>'
            )

    def marker(self, t: float) -> None:
        x = self.x(t)
        self.items.append(
            f'<line x1="{x:.3f}" y1="{MARGIN_T}" x2="{x:.3f}" y2="{HEIGHT - MARGIN_B}" '
            'stroke="#d62728" stroke-width="1.5"/>'
        )

    def render(self, x_label: str) -> str:
        x0, x1 = MARGIN_L, WIDTH - MARGIN_R
        y0, y1 = HEIGHT - MARGIN_B, MARGIN_T
        axes = [
            f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="#000"/>',
            f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#000"/>',
        ]
        step = 24.0 if self.P >= 48 else max(self.P / 8.0, 1.0)
        for t in np.arange(0.0, self.P + 1e-9, step):
            axes.append(
                f'<text x="{self.x(t):.1f}" y="{y0 + 16}" font-size="11" '
                f'text-anchor="middle">{t:g}</text>'
            )
        axes.append(
            f'<text x="{(x0 + x1) / 2:.1f}" y="{HEIGHT - 6}" font-size="12" '
            f'text-anchor="middle">{escape(x_label)}</text>'
        )
        if self.title:
            axes.append(f'<text x="{x0}" y="14" font-size="12">{escape(self.title)}</text>')
        body = "\n".join(self.items + axes)
        return (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">\n{body}\n</svg>\n'
        )


def path_ordinates(svg_text: str, name: str) -> list[float]:
    """Pixel y coordinates of the path with the given id."""
    import xml.etree.ElementTree as ET

    root = ET.fromstring(svg_text)
    for el in root.iter("{http://www.w3.org/2000/svg}path"):
        if el.get("id") == name:
            coords = el.get("d").replace("M", "").split("L")
            return [float(c.split(",")[1]) for c in coords]
    raise KeyError(name)
