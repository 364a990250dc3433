"""Closed-curve primitives for bubble boundaries.

Boundaries are closed polylines stored as ``(N, 2)`` float arrays with the
closing edge implied (the last vertex is *not* a repeat of the first).
Bubbles are oriented counterclockwise, so their shoelace area is positive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import brentq
from scipy.spatial import ConvexHull, cKDTree
from shapely.geometry import LinearRing, Polygon

FloatArray = NDArray[np.float64]

MIN_VERTICES = 8


class GeometryError(ValueError):
    """Invalid curve data or an impossible geometric operation."""


class OrientationError(GeometryError):
    pass


class AmbiguousPinchError(GeometryError):
    pass


def as_vertices(curve: "BoundaryCurve | Sequence | np.ndarray") -> FloatArray:
    if isinstance(curve, BoundaryCurve):
        return curve.vertices
    if np.iscomplexobj(curve):
        z = np.asarray(curve)
        return np.column_stack([z.real, z.imag]).astype(np.float64)
    arr = np.asarray(curve, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError("vertices must have shape (N, 2)")
    return arr


@dataclass(frozen=True, eq=False)
class BoundaryCurve:
    """A closed, counterclockwise polyline.

    ``degenerate`` marks curves that are known not to be simple (slits,
    collapsed traces); such curves skip the simplicity and orientation checks.
    """

    vertices: FloatArray
    degenerate: bool = False

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(as_vertices(self.vertices), dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        if not np.isfinite(v).all():
            raise GeometryError("curve has non-finite vertices")
        if len(v) < MIN_VERTICES:
            raise GeometryError(f"curve needs at least {MIN_VERTICES} vertices, got {len(v)}")
        if self.degenerate:
            return
        steps = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        if np.any(steps == 0.0):
            raise GeometryError("consecutive vertices must be distinct")
        if signed_area(v) <= 0.0:
            raise OrientationError("curve is not counterclockwise (signed area <= 0)")

    @classmethod
    def from_complex(cls, z: np.ndarray, degenerate: bool = False) -> "BoundaryCurve":
        z = np.asarray(z, dtype=complex)
        return cls(np.column_stack([z.real, z.imag]), degenerate=degenerate)

    @property
    def z(self) -> np.ndarray:
        return self.vertices[:, 0] + 1j * self.vertices[:, 1]

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return signed_area(self.vertices)

    @property
    def perimeter(self) -> float:
        return perimeter(self.vertices)

    @property
    def centroid(self) -> FloatArray:
        return centroid(self.vertices)

    def is_simple(self) -> bool:
        return is_simple(self.vertices)

    def translated(self, dx: float, dy: float) -> "BoundaryCurve":
        return BoundaryCurve(self.vertices + np.array([dx, dy]), self.degenerate)

    def scaled(self, s: float) -> "BoundaryCurve":
        return BoundaryCurve(self.vertices * s, self.degenerate)


@dataclass(frozen=True, eq=False)
class BubbleSystem:
    """The air domain at one instant: disjoint bubbles with stable labels."""

    bubbles: tuple[BoundaryCurve, ...]
    time: float = 0.0
    labels: tuple[int, ...] = field(default=())

    def __post_init__(self) -> None:
        bubbles = tuple(self.bubbles)
        object.__setattr__(self, "bubbles", bubbles)
        labels = tuple(self.labels) if self.labels else tuple(range(len(bubbles)))
        if len(labels) != len(bubbles):
            raise GeometryError("one label per bubble is required")
        if len(set(labels)) != len(labels):
            raise GeometryError("bubble labels must be unique")
        object.__setattr__(self, "labels", labels)
        if not bubbles:
            raise GeometryError("a bubble system needs at least one bubble")
        if self.total_area <= 0.0:
            raise GeometryError("total area must be positive")

    @property
    def areas(self) -> list[float]:
        return [b.area for b in self.bubbles]

    @property
    def total_area(self) -> float:
        return float(sum(b.area for b in self.bubbles))

    def __len__(self) -> int:
        return len(self.bubbles)

    def bubble(self, label: int) -> BoundaryCurve:
        return self.bubbles[self.labels.index(label)]

    def clearance(self) -> float:
        """Smallest distance between two different bubbles (inf for one)."""
        best = np.inf
        for i in range(len(self.bubbles)):
            for j in range(i + 1, len(self.bubbles)):
                best = min(best, Polygon(self.bubbles[i].vertices).distance(
                    Polygon(self.bubbles[j].vertices)))
        return float(best)

    def check_disjoint(self) -> None:
        if len(self.bubbles) > 1 and self.clearance() <= 0.0:
            raise GeometryError("bubbles overlap or touch")

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean membership (characteristic function of the air domain)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        inside = np.zeros(len(pts), dtype=bool)
        for b in self.bubbles:
            inside |= points_in_polygon(pts, b.vertices)
        return inside

    def with_time(self, t: float) -> "BubbleSystem":
        return BubbleSystem(self.bubbles, t, self.labels)


# ---------------------------------------------------------------- measures

def signed_area(curve) -> float:
    v = as_vertices(curve)
    if len(v) < 3:
        raise GeometryError("area needs at least 3 vertices")
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def area(curve) -> float:
    """Shoelace area; negative values signal clockwise orientation."""
    return signed_area(curve)


def check_orientation(curve) -> None:
    if signed_area(curve) <= 0.0:
        raise OrientationError("curve is clockwise or has zero area")


def perimeter(curve) -> float:
    v = as_vertices(curve)
    return float(np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1).sum())


def centroid(curve) -> FloatArray:
    v = as_vertices(curve)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6.0 * a)
    cy = ((y + yn) * cross).sum() / (6.0 * a)
    return np.array([cx, cy])


def second_moments(curve) -> FloatArray:
    """Central second area moments ``[[Ixx, Ixy], [Ixy, Iyy]]`` of a polygon."""
    v = as_vertices(curve) - centroid(curve)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    ixx = (cross * (x * x + x * xn + xn * xn)).sum() / 12.0
    iyy = (cross * (y * y + y * yn + yn * yn)).sum() / 12.0
    ixy = (cross * (x * yn + 2 * x * y + 2 * xn * yn + xn * y)).sum() / 24.0
    return np.array([[ixx, ixy], [ixy, iyy]])


def diameter(curve) -> float:
    """Exact polyline diameter by rotating calipers on the convex hull."""
    v = as_vertices(curve)
    try:
        hull = v[ConvexHull(v).vertices]
    except Exception:  # collinear input: hull is a segment
        d = v - v[0]
        far = v[np.argmax(np.einsum("ij,ij->i", d, d))]
        d = v - far
        return float(np.sqrt(np.einsum("ij,ij->i", d, d).max()))
    return _calipers_diameter(hull)


def _calipers_diameter(hull: FloatArray) -> float:
    m = len(hull)
    if m == 2:
        return float(np.linalg.norm(hull[1] - hull[0]))

    def tri_area(a, b, c):
        return abs((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))

    # start j at the vertex farthest from the first edge so it never stalls on
    # a near-tie before reaching the antipodal side
    e = hull[1] - hull[0]
    j = int(np.argmax(np.abs(e[0] * (hull[:, 1] - hull[0, 1]) - e[1] * (hull[:, 0] - hull[0, 0]))))
    best = 0.0
    for i in range(m):
        ni = (i + 1) % m
        while tri_area(hull[i], hull[ni], hull[(j + 1) % m]) >= tri_area(hull[i], hull[ni], hull[j]) \
                and (j + 1) % m != i:
            j = (j + 1) % m
            best = max(best, np.linalg.norm(hull[i] - hull[j]), np.linalg.norm(hull[ni] - hull[j]))
        best = max(best, np.linalg.norm(hull[i] - hull[j]), np.linalg.norm(hull[ni] - hull[j]))
    return float(best)


def is_simple(curve) -> bool:
    v = as_vertices(curve)
    try:
        return bool(LinearRing(v).is_simple)
    except Exception:
        return False


def points_in_polygon(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Even-odd point-in-polygon test, vectorised over points."""
    px, py = points[:, 0][:, None], points[:, 1][:, None]
    x0, y0 = vertices[:, 0][None, :], vertices[:, 1][None, :]
    x1, y1 = np.roll(vertices[:, 0], -1)[None, :], np.roll(vertices[:, 1], -1)[None, :]
    crosses = (y0 > py) != (y1 > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = x0 + (py - y0) * (x1 - x0) / (y1 - y0)
    hit = crosses & (px < xint)
    return (hit.sum(axis=1) % 2) == 1


def point_segment_distances(points: np.ndarray, vertices: np.ndarray) -> np.ndarray:
    """Distance from each point to the closed polyline, chunked to bound memory."""
    pts = np.atleast_2d(points)
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    ab = b - a
    ab2 = np.einsum("ij,ij->i", ab, ab)
    ab2[ab2 == 0] = 1.0
    out = np.empty(len(pts))
    chunk = max(1, 2_000_000 // max(len(a), 1))
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk, None, :]
        t = np.clip(np.einsum("pij,ij->pi", p - a[None], ab) / ab2, 0.0, 1.0)
        proj = a[None] + t[..., None] * ab[None]
        d = p - proj
        out[s:s + chunk] = np.sqrt(np.einsum("pij,pij->pi", d, d).min(axis=1))
    return out


def hausdorff_distance(c1, c2) -> float:
    """Symmetric Hausdorff distance between two closed polylines.

    Vertices of each curve are densified to the finer of the two mean
    spacings and measured against the other curve's exact segments.
    """
    v1, v2 = as_vertices(c1), as_vertices(c2)
    h = min(perimeter(v1) / len(v1), perimeter(v2) / len(v2))
    d1 = point_segment_distances(_densify(v1, h), v2).max()
    d2 = point_segment_distances(_densify(v2, h), v1).max()
    return float(max(d1, d2))


def _densify(v: FloatArray, h: float) -> FloatArray:
    nxt = np.roll(v, -1, axis=0)
    seg = np.linalg.norm(nxt - v, axis=1)
    k = np.maximum(1, np.ceil(seg / h).astype(int))
    parts = [v[i] + np.outer(np.arange(k[i]) / k[i], nxt[i] - v[i]) for i in range(len(v))]
    return np.vstack(parts)


# ------------------------------------------------------------- resampling

def resample(curve, spacing: float) -> BoundaryCurve:
    """Arc-length-uniform resampling that preserves the enclosed area.

    Vertices are placed at equal polyline arc length; the result is then
    scaled about its centroid to restore the input area exactly, which keeps
    the spacing uniform and makes the operation idempotent.
    """
    v = as_vertices(curve)
    length = perimeter(v)
    if spacing <= 0 or not np.isfinite(spacing):
        raise GeometryError("spacing must be positive")
    if spacing > length / MIN_VERTICES:
        raise GeometryError(f"spacing {spacing:g} too coarse for perimeter {length:g}")
    n = max(MIN_VERTICES, int(round(length / spacing)))
    out = _uniform_polyline_points(v, n)
    a0, a1 = signed_area(v), signed_area(out)
    if a1 > 0 and a0 > 0:
        c = centroid(out)
        out = c + (out - c) * np.sqrt(a0 / a1)
    return BoundaryCurve(out, degenerate=isinstance(curve, BoundaryCurve) and curve.degenerate)


def _uniform_polyline_points(v: FloatArray, n: int, sweeps: int = 8) -> FloatArray:
    """``n`` points on the polyline whose own chords are all equal."""
    closed = np.vstack([v, v[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    total = s[-1]

    def at(t):
        return np.column_stack([np.interp(t, s, closed[:, 0]), np.interp(t, s, closed[:, 1])])

    t = np.arange(n) * (total / n)
    for _ in range(sweeps):
        pts = at(t)
        chords = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        if chords.max() - chords.min() < 1e-13 * total:
            break
        sigma = np.concatenate([[0.0], np.cumsum(chords)])
        t_ext = np.concatenate([t, [total]])
        t = np.interp(np.arange(n) * (sigma[-1] / n), sigma, t_ext)
    return at(t)


# ---------------------------------------------------------------- surgery

def _cyclic_arc(s: np.ndarray, i: np.ndarray, j: np.ndarray, length: float) -> np.ndarray:
    d = np.abs(s[i] - s[j])
    return np.minimum(d, length - d)


def find_pinches(curve, clearance: float) -> list[tuple[int, int, float]]:
    """Close approaches between arcs that are far apart along the curve.

    Returns one ``(i, j, distance)`` per distinct pinch (closest vertex pair
    of each cluster), sorted by distance.
    """
    v = as_vertices(curve)
    n = len(v)
    seg = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
    length = float(seg.sum())
    pairs = cKDTree(v).query_pairs(clearance, output_type="ndarray")
    if len(pairs) == 0:
        return []
    i, j = pairs[:, 0], pairs[:, 1]
    # A smooth arc needs arc length ~ distance to come back; demand a detour.
    far = _cyclic_arc(s, i, j, length) > max(3.0 * clearance, 4.0 * length / n)
    i, j = i[far], j[far]
    if len(i) == 0:
        return []
    dist = np.linalg.norm(v[i] - v[j], axis=1)
    order = np.argsort(dist)
    clusters: list[tuple[int, int, float]] = []
    radius = 4.0 * clearance
    for k in order:
        a, b = int(min(i[k], j[k])), int(max(i[k], j[k]))
        for ca, cb, _ in clusters:
            if (_cyclic_arc(s, np.array([a]), np.array([ca]), length)[0] < radius
                    and _cyclic_arc(s, np.array([b]), np.array([cb]), length)[0] < radius):
                break
        else:
            clusters.append((a, b, float(dist[k])))
    return clusters


def split_on_pinch(curve, clearance: float) -> list[BoundaryCurve]:
    """Cut a curve at its single neck into two closed curves.

    The cut joins the midpoints of the two closest-approach edges; the
    removed neck sliver has area O(clearance**2). Curves without a pinch are
    returned unchanged as a one-element list.
    """
    v = as_vertices(curve)
    n = len(v)
    spacing = perimeter(v) / n
    if clearance <= spacing:
        raise GeometryError("clearance must exceed the local vertex spacing")
    pinches = find_pinches(v, clearance)
    if not pinches:
        return [curve if isinstance(curve, BoundaryCurve) else BoundaryCurve(v)]
    if len(pinches) > 1:
        raise AmbiguousPinchError(f"{len(pinches)} simultaneous pinches below clearance {clearance:g}")
    i, j, _ = pinches[0]
    # choose the closest pair of edges adjacent to the closest vertex pair
    best = None
    for a in (i - 1, i):
        for b in (j - 1, j):
            ma = 0.5 * (v[a % n] + v[(a + 1) % n])
            mb = 0.5 * (v[b % n] + v[(b + 1) % n])
            d = np.linalg.norm(ma - mb)
            if best is None or d < best[0]:
                best = (d, a % n, b % n, ma, mb)
    _, a, b, ma, mb = best
    if a > b:
        a, b, ma, mb = b, a, mb, ma
    # piece one: midpoint(a) -> v[a+1..b] -> midpoint(b); piece two: the rest
    p1 = np.vstack([ma[None], v[a + 1:b + 1], mb[None]])
    p2 = np.vstack([mb[None], v[b + 1:], v[:a + 1], ma[None]])
    pieces = []
    for p in (p1, p2):
        if len(p) < MIN_VERTICES or signed_area(p) <= 0:
            raise GeometryError("pinch surgery produced a degenerate piece")
        pieces.append(BoundaryCurve(p))
    return pieces


# ---------------------------------------------------------- normalisation

def normalize_for_asymptotics(curve, n: int, alpha: float = 0.0,
                              measure: str = "diameter") -> BoundaryCurve:
    """Apply ``z -> z + i*alpha*z**n`` then the anisotropic scaling
    ``x -> c x, y -> c**(2n-1) y``.

    ``c`` is fixed so that the result has diameter 2 (``measure="diameter"``)
    or x-extent 2 (``measure="width"``, the normalisation in which the
    limit curves are written: x ranges over [-1, 1]).
    The curve is not recentred: the contraction point must sit at the origin.
    """
    if n < 1:
        raise GeometryError("n must be >= 1")
    z = BoundaryCurve(as_vertices(curve), degenerate=True).z
    z = z + 1j * alpha * z ** n
    x, y = z.real, z.imag
    p = 2 * n - 1

    def size(c: float) -> float:
        pts = np.column_stack([c * x, c ** p * y])
        if measure == "width":
            return float(pts[:, 0].max() - pts[:, 0].min())
        return diameter(pts)

    s1 = size(1.0)
    if s1 <= 0.0:
        raise GeometryError("zero-diameter input")
    if measure == "width" or n == 1:
        c = 2.0 / s1
    else:
        # size(c) increases with c; bracket and solve
        lo = hi = 2.0 / s1
        while size(lo) > 2.0:
            lo *= 0.5
        while size(hi) < 2.0:
            hi *= 2.0
        c = hi if lo == hi else brentq(lambda c: size(c) - 2.0, lo, hi, xtol=1e-15 * hi, rtol=1e-15)
    out = np.column_stack([c * x, c ** p * y])
    return BoundaryCurve(out, degenerate=True)


# ------------------------------------------------------------------ cusps

@dataclass(frozen=True)
class CuspFit:
    exponent: float
    is_cusp: bool
    prefactor: float
    axis: FloatArray  # unit vector from the tip into the curve body
    tip: FloatArray


def cusp_exponent(curve, point, window: tuple[float, float] = (0.05, 0.20),
                  tol: float | None = None, scale: float | None = None) -> CuspFit:
    """Fit ``|y| ~ C x**p`` in a local frame at ``point``.

    The window is measured in arc length from the tip as fractions of
    ``scale`` (default: half the perimeter). At a cusp both branches leave
    the tip in the same direction and the frame's x axis is their common
    direction; at a smooth point x runs along the tangent.
    """
    v = as_vertices(curve)
    point = np.asarray(point, dtype=float)
    seg = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
    length = float(seg.sum())
    if tol is None:
        tol = 2.0 * seg.max()
    d = np.linalg.norm(v - point, axis=1)
    k = int(np.argmin(d))
    if d[k] > tol:
        raise GeometryError(f"point is {d[k]:.3g} away from the curve")
    tip = v[k]
    if scale is None:
        scale = 0.5 * length
    lo, hi = window[0] * scale, window[1] * scale
    s = np.concatenate([[0.0], np.cumsum(seg)[:-1]])
    fwd = (s - s[k]) % length
    bwd = (s[k] - s) % length
    b1 = (fwd >= lo) & (fwd <= hi)
    b2 = (bwd >= lo) & (bwd <= hi)
    if b1.sum() < 3 or b2.sum() < 3:
        raise GeometryError("too few vertices in the fit window; refine the curve")
    inner = lo + (hi - lo) / 3
    i1 = b1 & (fwd <= inner) if (b1 & (fwd <= inner)).any() else b1
    i2 = b2 & (bwd <= inner) if (b2 & (bwd <= inner)).any() else b2
    u1 = (v[i1] - tip).mean(axis=0)
    u2 = (v[i2] - tip).mean(axis=0)
    u1 /= np.linalg.norm(u1)
    u2 /= np.linalg.norm(u2)
    is_cusp = float(np.dot(u1, u2)) > 0.0  # both branches leave on the same side
    if is_cusp:
        ax = u1 + u2
    else:
        ax = u1 - u2  # tangent direction
    ax /= np.linalg.norm(ax)
    nrm = np.array([-ax[1], ax[0]])
    pts = v[b1 | b2] - tip
    xl = np.abs(pts @ ax)
    yl = np.abs(pts @ nrm)
    good = (xl > 0) & (yl > 0)
    if good.sum() < 4:
        raise GeometryError("degenerate local frame")
    slope, icpt = np.polyfit(np.log(xl[good]), np.log(yl[good]), 1)
    return CuspFit(float(slope), bool(is_cusp), float(np.exp(icpt)), ax, tip)
