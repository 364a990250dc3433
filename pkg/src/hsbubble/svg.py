"""Static SVG plots: nested boundaries, curve overlays, phase-plane region maps."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

SIZE = 640
MARGIN = 48
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
STATUS_COLORS = {"accessible": "#8fd19e", "inaccessible": "#f3a6a6", "boundary": "#f6d76b", "unknown": "#cccccc"}


def g6(x) -> str:
    return f"{float(x):.6g}"


@dataclass
class Layer:
    points: np.ndarray  # (n, 2)
    label: str = ""
    color: str | None = None
    closed: bool = True
    width: float = 1.2


@dataclass
class Cells:
    """Axis-aligned rectangles ``(x0, y0, x1, y1)`` with fill colours."""

    rects: np.ndarray
    colors: Sequence[str]
    legend: dict = field(default_factory=dict)


class _Viewport:
    """Fixed, aspect-preserving data-to-pixel mapping (y up)."""

    def __init__(self, lo: np.ndarray, hi: np.ndarray) -> None:
        span = np.maximum(hi - lo, 1e-12)
        self.s = (SIZE - 2 * MARGIN) / span.max()
        self.lo = lo
        self.off = (SIZE - 2 * MARGIN - self.s * span) / 2

    def __call__(self, p: np.ndarray) -> np.ndarray:
        p = np.atleast_2d(p)
        x = MARGIN + self.off[0] + self.s * (p[:, 0] - self.lo[0])
        y = SIZE - MARGIN - self.off[1] - self.s * (p[:, 1] - self.lo[1])
        return np.column_stack([x, y])


def render_svg(layers: Sequence[Layer] = (), cells: Cells | None = None, title: str = "",
               notes: Sequence[str] = ()) -> str:
    """Deterministic SVG document; raises on empty input."""
    pts = [np.asarray(L.points, float) for L in layers if len(L.points)]
    boxes = list(pts)
    if cells is not None and len(cells.rects):
        r = np.asarray(cells.rects, float)
        boxes.append(np.vstack([r[:, :2], r[:, 2:]]))
    if not boxes:
        raise ValueError("nothing to draw")
    allp = np.vstack(boxes)
    vp = _Viewport(allp.min(axis=0), allp.max(axis=0))
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
           f'viewBox="0 0 {SIZE} {SIZE}">',
           f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>']
    if title:
        out.append(f'<text x="{MARGIN}" y="{MARGIN / 2:.1f}" font-family="sans-serif" '
                   f'font-size="14">{escape(title)}</text>')
    if cells is not None:
        out.append('<g id="cells" stroke="none">')
        for (x0, y0, x1, y1), c in zip(np.asarray(cells.rects, float), cells.colors):
            a, b = vp(np.array([[x0, y1], [x1, y0]]))
            out.append(f'<rect x="{a[0]:.3f}" y="{a[1]:.3f}" width="{b[0] - a[0]:.3f}" '
                       f'height="{b[1] - a[1]:.3f}" fill="{c}"/>')
        out.append("</g>")
    legend = []
    for k, L in enumerate(layers):
        if not len(L.points):
            continue
        color = L.color or PALETTE[k % len(PALETTE)]
        xy = vp(np.asarray(L.points, float))
        d = " ".join(f"{x:.3f},{y:.3f}" for x, y in xy)
        tag = "polygon" if L.closed else "polyline"
        out.append(f'<{tag} points="{d}" fill="none" stroke="{color}" stroke-width="{L.width}"/>')
        if L.label:
            legend.append((L.label, color))
    if cells is not None:
        legend += list(cells.legend.items())
    for k, (name, color) in enumerate(legend):
        y = MARGIN + 16 * k
        out.append(f'<rect x="{SIZE - 170}" y="{y - 9}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text x="{SIZE - 155}" y="{y}" font-family="sans-serif" font-size="11">{escape(name)}</text>')
    for k, note in enumerate(notes):
        out.append(f'<text x="{MARGIN}" y="{SIZE - MARGIN / 2 + 14 * k - 7:.1f}" font-family="sans-serif" '
                   f'font-size="11">{escape(note)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def snapshots_svg(snapshots, stride: int = 1, title: str = "") -> str:
    snaps = list(snapshots)[::max(1, stride)]
    layers = []
    for k, s in enumerate(snaps):
        for b in s.bubbles:
            layers.append(Layer(b.vertices, f"t={g6(s.time)}" if b is s.bubbles[0] else "",
                                PALETTE[k % len(PALETTE)], width=0.8))
    return render_svg(layers, title=title or f"{len(snaps)} snapshots")


def overlay_svg(fitted: np.ndarray, target: np.ndarray, sup: float, title: str = "") -> str:
    return render_svg([Layer(target, "limit curve", "#000000", width=1.6), Layer(fitted, "rescaled boundary", "#d62728")],
                      title=title, notes=[f"sup-distance {g6(sup)}"])


def region_svg(region) -> str:
    n = region.resolution
    dx, dy = region.S1 / n, region.S2 / n
    rects, colors = [], []
    for i in range(n):
        for j in range(n):
            rects.append((i * dx, j * dy, (i + 1) * dx, (j + 1) * dy))
            colors.append(STATUS_COLORS[str(region.status[i, j])])
    used = sorted({str(s) for s in region.status.ravel()})
    layers = []
    if len(region.free_path):
        layers.append(Layer(region.free_path, "free path", "#000000", closed=False, width=1.6))
    return render_svg(layers, Cells(np.array(rects), colors, {k: STATUS_COLORS[k] for k in used}),
                      title=f"phase rectangle {g6(region.S1)} x {g6(region.S2)}",
                      notes=[f"origin accessible: {region.origin_accessible}"])
