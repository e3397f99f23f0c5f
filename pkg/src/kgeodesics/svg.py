"""Minimal deterministic SVG emission for chart-domain plots.

A fixed 800x800 viewport maps the chart bounding box; geodesics become
polylines split at chart wraps and sheet changes (back-sheet segments are
dashed).  Output formatting is fixed-precision so identical inputs produce
byte-identical files.
"""

from __future__ import annotations

import math

from .surfaces import BACK, DoubledPolygon, FlatTorus, SurfaceModel, _Spheroid

VIEW = 800.0


def _fmt(x: float) -> str:
    return f"{x:.4f}"


class SvgCanvas:
    def __init__(self, bbox, margin: float = 40.0):
        self.x0, self.y0, self.x1, self.y1 = bbox
        self.margin = margin
        self.parts: list[str] = []

    def _map(self, u, v):
        sx = (VIEW - 2 * self.margin) / max(self.x1 - self.x0, 1e-12)
        sy = (VIEW - 2 * self.margin) / max(self.y1 - self.y0, 1e-12)
        px = self.margin + (u - self.x0) * sx
        py = VIEW - self.margin - (v - self.y0) * sy
        return px, py

    def polyline(self, pts, color="#1f6fb2", width=1.5, dashed=False):
        if len(pts) < 2:
            return
        coords = " ".join(
            f"{_fmt(px)},{_fmt(py)}" for px, py in (self._map(u, v) for u, v in pts)
        )
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self.parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} points="{coords}"/>'
        )

    def circle(self, u, v, r=4.0, color="#c23b22"):
        px, py = self._map(u, v)
        self.parts.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="{r}" fill="{color}"/>')

    def line(self, u0, v0, u1, v1, color="#888888", width=1.0, dashed=True):
        p0 = self._map(u0, v0)
        p1 = self._map(u1, v1)
        dash = ' stroke-dasharray="4,4"' if dashed else ""
        self.parts.append(
            f'<line x1="{_fmt(p0[0])}" y1="{_fmt(p0[1])}" x2="{_fmt(p1[0])}" y2="{_fmt(p1[1])}" '
            f'stroke="{color}" stroke-width="{width}"{dash}/>'
        )

    def text(self, u, v, s, size=12):
        px, py = self._map(u, v)
        self.parts.append(
            f'<text x="{_fmt(px)}" y="{_fmt(py)}" font-size="{size}" font-family="monospace">{s}</text>'
        )

    def render(self, comments=()) -> str:
        head = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(VIEW)}" height="{int(VIEW)}" '
            f'viewBox="0 0 {int(VIEW)} {int(VIEW)}">'
        ]
        for c in comments:
            head.append(f"<!-- {c} -->")
        head.append(f'<rect width="{int(VIEW)}" height="{int(VIEW)}" fill="white"/>')
        return "\n".join(head + self.parts + ["</svg>"]) + "\n"


def chart_bbox(surface: SurfaceModel):
    if isinstance(surface, _Spheroid):
        return (0.0, 0.0, math.pi, 2.0 * math.pi)
    if isinstance(surface, FlatTorus):
        return (0.0, 0.0, surface.a, surface.b)
    if isinstance(surface, DoubledPolygon):
        v = surface.vertices
        return (float(v[:, 0].min()), float(v[:, 1].min()), float(v[:, 0].max()), float(v[:, 1].max()))
    raise TypeError(f"no chart bbox for {surface!r}")


def arc_svg(surface: SurfaceModel, arcs, points=(), comments=()) -> str:
    """Render arcs (or closed geodesics) over the chart domain."""
    canvas = SvgCanvas(chart_bbox(surface))
    if isinstance(surface, DoubledPolygon):
        verts = [tuple(v) for v in surface.vertices]
        canvas.polyline(verts + [verts[0]], color="#444444", width=1.0)
    for item in arcs:
        arc = item.arc if hasattr(item, "arc") else item
        _draw_arc(canvas, surface, arc)
    for (u, v) in points:
        canvas.circle(u, v)
    return canvas.render(comments=comments)


def _draw_arc(canvas, surface, arc, n=256):
    import numpy as np

    ts = np.linspace(0.0, arc.length, n)
    runs = []
    cur = []
    prev = None
    prev_sheet = None
    for t in ts:
        p, _ = arc.sample_at(float(t))
        sheet = p.sheet
        if prev is not None:
            jump = math.hypot(p.u - prev[0], p.v - prev[1])
            scale = max(canvas.x1 - canvas.x0, canvas.y1 - canvas.y0)
            if jump > 0.5 * scale or sheet != prev_sheet:
                runs.append((cur, prev_sheet))
                cur = []
        cur.append((p.u, p.v))
        prev = (p.u, p.v)
        prev_sheet = sheet
    if cur:
        runs.append((cur, prev_sheet))
    for pts, sheet in runs:
        canvas.polyline(pts, dashed=(sheet == BACK))


def sweep_svg(records, c0=None, comments=()) -> str:
    """Cut distance vs c with the 2*pi/3 threshold and c0 marked."""
    cs = [r.c for r in records]
    ds = [r.cut_distance for r in records]
    bbox = (min(cs), 0.0, max(cs), math.pi)
    canvas = SvgCanvas(bbox)
    target = 2.0 * math.pi / 3.0
    canvas.line(bbox[0], target, bbox[2], target, color="#c23b22")
    canvas.text(bbox[0], target + 0.08, "2*pi/3")
    pts = sorted(zip(cs, ds))
    canvas.polyline(pts)
    for c, d in pts:
        canvas.circle(c, d, r=3.0, color="#1f6fb2")
    if c0 is not None:
        canvas.line(c0, 0.0, c0, math.pi, color="#2f9e44")
        canvas.text(c0, 0.15, f"c0={c0:.5f}")
    return canvas.render(comments=comments)
