"""Gravity (logarithmic) potential of polygonal bubble systems.

``Pi(p) = 1/(2 pi) * integral over B of log|z - p| dA`` is reduced to a sum
over boundary segments, each integrated in closed form:

* value:   Green's identity with ``g = r**2 (log r - 1) / 4`` (``lap g = log r``),
* d/dp:    ``dPi/dp = -F/(4 pi)``, ``F = (1/2i) * contour integral of
  (conj(z) - conj(p)) / (z - p) dz``,
* d2/dp2:  the p-derivative of the same contour integral,

where ``d/dp`` is the Wirtinger derivative. The Laplacian comes out as the
winding number, so the Poisson equation holds to rounding error.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from .geometry import BoundaryCurve, BubbleSystem, hausdorff_distance, as_vertices

GRADIENT_TOL = 1e-10
DEGENERACY_RATIO = 1e-3


class NearBoundaryError(ValueError):
    """The probe point is too close to a boundary vertex."""


class OutsideDomainError(ValueError):
    pass


class SymmetryError(ValueError):
    pass


@dataclass(frozen=True)
class PotentialProbe:
    point: np.ndarray
    value: float
    gradient: np.ndarray
    hessian: np.ndarray

    @property
    def trace(self) -> float:
        return float(self.hessian[0, 0] + self.hessian[1, 1])


class GravityPotential:
    """Potential of a signed union of polygons.

    ``curves`` are counterclockwise boundaries; a curve with sign -1
    subtracts its region, so ``GravityPotential.difference(B0, Bt)`` is the
    potential of ``B0 minus Bt`` when ``Bt`` lies inside ``B0``.
    """

    def __init__(self, curves: Iterable, signs: Sequence[float] | None = None,
                 guard: float = 0.1) -> None:
        curves = list(curves)
        if signs is None:
            signs = [1.0] * len(curves)
        z1, z2, spacing = [], [], []
        for c, s in zip(curves, signs):
            v = as_vertices(c)
            z = v[:, 0] + 1j * v[:, 1]
            if s < 0:
                z = z[::-1]
            z1.append(z)
            z2.append(np.roll(z, -1))
            spacing.append(np.full(len(z), np.abs(np.roll(z, -1) - z).mean()))
        self.z1 = np.concatenate(z1)
        self.d = np.concatenate(z2) - self.z1
        self.length = np.abs(self.d)
        self.e = np.conj(self.d) / self.d
        self.tangent = self.d / self.length
        self._tree = cKDTree(np.column_stack([self.z1.real, self.z1.imag]))
        self._guard = guard * np.concatenate(spacing)
        self.signed_area = float(sum(s * BoundaryCurve(as_vertices(c), degenerate=True).area
                                     for c, s in zip(curves, signs)))

    @classmethod
    def of(cls, system: BubbleSystem, **kw) -> "GravityPotential":
        return cls(system.bubbles, **kw)

    @classmethod
    def difference(cls, outer: BubbleSystem, inner: BubbleSystem | None, **kw) -> "GravityPotential":
        if inner is None:
            return cls.of(outer, **kw)
        curves = list(outer.bubbles) + list(inner.bubbles)
        signs = [1.0] * len(outer.bubbles) + [-1.0] * len(inner.bubbles)
        return cls(curves, signs, **kw)

    # ------------------------------------------------------------ kernels
    def check_clearance(self, zeta: np.ndarray) -> None:
        pts = np.column_stack([zeta.real, zeta.imag])
        dist, idx = self._tree.query(pts)
        bad = dist < self._guard[idx]
        if bad.any():
            k = int(np.argmax(bad))
            raise NearBoundaryError(
                f"point ({pts[k, 0]:.6g}, {pts[k, 1]:.6g}) is within {dist[k]:.3g} of a boundary vertex")

    def _chunks(self, zeta: np.ndarray):
        step = max(1, 4_000_000 // max(len(self.z1), 1))
        for s in range(0, len(zeta), step):
            yield s, zeta[s:s + step, None]

    def wirtinger(self, zeta, guard: bool = True):
        """Return ``(dPi/dp, d2Pi/dp2, winding)`` at complex points ``zeta``."""
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        if guard:
            self.check_clearance(zeta)
        d1 = np.empty(len(zeta), complex)
        d2 = np.empty(len(zeta), complex)
        wind = np.empty(len(zeta))
        for s, zc in self._chunks(zeta):
            a = self.z1[None, :] - zc
            b = a + self.d[None, :]
            with np.errstate(divide="ignore", invalid="ignore"):
                log_ratio = np.log(b / a)
                c = np.conj(a) - a * self.e[None, :]
                f = ((c * log_ratio).sum(axis=1) + np.conj(self.d).sum()) / 2j
                df = ((c * (1.0 / a - 1.0 / b) + self.e[None, :] * log_ratio).sum(axis=1)) / 2j
            d1[s:s + len(zc)] = -f / (4 * np.pi)
            d2[s:s + len(zc)] = -df / (4 * np.pi)
            wind[s:s + len(zc)] = log_ratio.imag.sum(axis=1) / (2 * np.pi)
        return d1, d2, np.rint(wind)

    def value(self, zeta, guard: bool = True) -> np.ndarray:
        zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
        if guard:
            self.check_clearance(zeta)
        out = np.empty(len(zeta))
        nrm = -1j * self.tangent  # outward normal of a counterclockwise edge
        for s, zc in self._chunks(zeta):
            a = self.z1[None, :] - zc
            b = a + self.d[None, :]
            t = self.tangent[None, :]
            u1 = (a * np.conj(t)).real
            u2 = (b * np.conj(t)).real
            p = (a * np.conj(nrm[None, :])).real
            out[s:s + len(zc)] = (p * (0.5 * (_log_line(u2, p) - _log_line(u1, p))
                                       - 0.25 * self.length[None, :])).sum(axis=1) / (2 * np.pi)
        return out

    def gradient(self, points, guard: bool = True) -> np.ndarray:
        zeta = _as_complex(points)
        d1, _, _ = self.wirtinger(zeta, guard)
        return np.column_stack([2 * d1.real, -2 * d1.imag])

    def hessian(self, points, guard: bool = True) -> np.ndarray:
        zeta = _as_complex(points)
        _, d2, wind = self.wirtinger(zeta, guard)
        return _hessian_from(d2, wind)

    def grad_hess(self, points, guard: bool = True):
        zeta = _as_complex(points)
        d1, d2, wind = self.wirtinger(zeta, guard)
        return np.column_stack([2 * d1.real, -2 * d1.imag]), _hessian_from(d2, wind)

    def probe(self, point, guard: bool = True) -> PotentialProbe:
        zeta = _as_complex(point)
        d1, d2, wind = self.wirtinger(zeta, guard)
        val = self.value(zeta, guard=False)[0]
        grad = np.array([2 * d1.real[0], -2 * d1.imag[0]])
        return PotentialProbe(np.array([zeta[0].real, zeta[0].imag]), float(val), grad,
                              _hessian_from(d2, wind)[0])


def _log_line(u, p):
    """Antiderivative of log sqrt(u**2 + p**2) in u."""
    r2 = u * u + p * p
    with np.errstate(divide="ignore", invalid="ignore"):
        at = np.where(p == 0.0, 0.0, p * np.arctan(u / np.where(p == 0.0, 1.0, p)))
        lg = np.where(r2 == 0.0, 0.0, u * np.log(np.where(r2 == 0.0, 1.0, r2)))
    return 0.5 * lg - u + at


def _hessian_from(d2: np.ndarray, wind: np.ndarray) -> np.ndarray:
    t = 4.0 * d2  # Pi_xx - Pi_yy - 2i Pi_xy
    h = np.empty((len(d2), 2, 2))
    h[:, 0, 0] = 0.5 * (wind + t.real)
    h[:, 1, 1] = 0.5 * (wind - t.real)
    h[:, 0, 1] = h[:, 1, 0] = -0.5 * t.imag
    return h


def _as_complex(points) -> np.ndarray:
    arr = np.asarray(points)
    if np.iscomplexobj(arr):
        return np.atleast_1d(arr).astype(complex)
    arr = np.atleast_2d(np.asarray(points, dtype=float))
    return arr[:, 0] + 1j * arr[:, 1]


# ------------------------------------------------------------- public ops

def eval_potential(system: BubbleSystem, point, guard: bool = True) -> PotentialProbe:
    """Value, gradient and Hessian of the gravity potential at one point."""
    return GravityPotential.of(system).probe(point, guard=guard)


def disk_potential(center, radius: float, point) -> PotentialProbe:
    """Closed-form potential of the disk ``|z - center| < radius``."""
    c = complex(*np.asarray(center, dtype=float))
    z = _as_complex(point)[0]
    w = z - c
    r2 = abs(w) ** 2
    if r2 < radius ** 2:
        val = (r2 - radius ** 2) / 4 + 0.5 * radius ** 2 * np.log(radius)
        grad = np.array([w.real, w.imag]) / 2
        hess = np.eye(2) / 2
    else:
        s = radius ** 2 / 2
        val = s * np.log(np.sqrt(r2))
        grad = s * np.array([w.real, w.imag]) / r2
        hess = s * np.array([[w.imag ** 2 - w.real ** 2, -2 * w.real * w.imag],
                             [-2 * w.real * w.imag, w.real ** 2 - w.imag ** 2]]) / r2 ** 2
    return PotentialProbe(np.array([z.real, z.imag]), float(val), grad, hess)


def ellipse_potential(a: float, b: float, point) -> PotentialProbe:
    """Interior potential of ``x**2/a**2 + y**2/b**2 < 1``.

    ``Pi = (b x**2 + a y**2) / (2 (a + b)) + C(a, b)``; the constant is not
    reported (``value`` omits it).
    """
    if a <= 0 or b <= 0:
        raise ValueError("semi-axes must be positive")
    x, y = np.asarray(point, dtype=float)
    if (x / a) ** 2 + (y / b) ** 2 >= 1.0:
        raise OutsideDomainError("point is not strictly inside the ellipse")
    k = 1.0 / (a + b)
    hess = np.diag([b * k, a * k])
    return PotentialProbe(np.array([x, y]), 0.5 * (b * k * x * x + a * k * y * y),
                          hess @ np.array([x, y]), hess)


def cauchy_from_gradient(z: complex, gradient) -> complex:
    """``conj(z) - 4 dPi/dz`` with ``dPi/dz = (Pi_x - i Pi_y) / 2``."""
    gx, gy = gradient
    return complex(np.conj(z) - 2.0 * (gx - 1j * gy))


def cauchy_transform(system: BubbleSystem, point) -> complex:
    """Cauchy transform ``h_B(z) = conj(z) - 4 dPi_B/dz`` at an interior point."""
    z = _as_complex(point)[0]
    if not system.contains(np.array([[z.real, z.imag]]))[0]:
        raise OutsideDomainError("point is outside every bubble")
    probe = eval_potential(system, z)
    return cauchy_from_gradient(z, probe.gradient)


# ---------------------------------------------------------- critical points

@dataclass(frozen=True, eq=False)
class CriticalPoint:
    location: np.ndarray
    kind: str  # minimum | saddle | maximum | degenerate
    degree: int
    hessian_eigenvalues: tuple[float, float]
    hessian_axes: tuple[np.ndarray, np.ndarray]
    value: float
    is_global_min: bool = False
    beta: float | None = None
    order: int = 2  # lowest significant Taylor order along the kernel direction

    @property
    def axis_angle(self) -> float:
        ax = self.hessian_axes[0]
        return float(np.arctan2(ax[1], ax[0]))

    def to_record(self) -> dict:
        return {"x": float(self.location[0]), "y": float(self.location[1]), "kind": self.kind,
                "degree": int(self.degree), "eig1": float(self.hessian_eigenvalues[0]),
                "eig2": float(self.hessian_eigenvalues[1]), "axis_angle": self.axis_angle,
                "global_min": bool(self.is_global_min)}


@dataclass(frozen=True)
class SeedFailure:
    seed: np.ndarray
    reason: str
    last: np.ndarray
    gradient_norm: float


@dataclass(frozen=True)
class CriticalPointReport:
    points: list[CriticalPoint]
    failures: list[SeedFailure]

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, k):
        return self.points[k]

    @property
    def global_minima(self) -> list[CriticalPoint]:
        return [p for p in self.points if p.is_global_min]


def _newton(pot: GravityPotential, seeds: np.ndarray, box, gtol: float, max_iter: int = 200):
    """Damped Newton on the gradient, vectorised over seeds."""
    z = seeds.astype(complex).copy()
    (x0, x1), (y0, y1) = box
    span = max(x1 - x0, y1 - y0)
    status = np.zeros(len(z), dtype=int)  # 0 running, 1 converged, 2 failed
    reason = np.array([""] * len(z), dtype=object)
    g, H = pot.grad_hess(z, guard=False)
    gn = np.linalg.norm(g, axis=1)
    for _ in range(max_iter):
        run = status == 0
        conv = run & (gn < gtol)
        status[conv] = 1
        run = status == 0
        bad = run & ~np.isfinite(gn)
        status[bad], reason[bad] = 2, "non-finite gradient"
        run = status == 0
        if not run.any():
            break
        idx = np.flatnonzero(run)
        step = np.zeros((len(idx), 2))
        for k, i in enumerate(idx):
            try:
                step[k] = -np.linalg.solve(H[i], g[i])
            except np.linalg.LinAlgError:
                step[k] = -g[i]
        sl = np.linalg.norm(step, axis=1)
        cap = 0.1 * span
        step *= np.minimum(1.0, cap / np.maximum(sl, 1e-300))[:, None]
        lam = np.ones(len(idx))
        accepted = np.zeros(len(idx), dtype=bool)
        zc = z[idx]
        gbest, Hbest, gnbest = g[idx], H[idx], gn[idx]
        for _ in range(30):
            todo = ~accepted
            if not todo.any():
                break
            trial = zc[todo] + lam[todo] * (step[todo, 0] + 1j * step[todo, 1])
            gt, Ht = pot.grad_hess(trial, guard=False)
            gnt = np.linalg.norm(gt, axis=1)
            ok = np.isfinite(gnt) & (gnt < gnbest[todo] * (1 - 1e-4 * lam[todo]) + 1e-300)
            sub = np.flatnonzero(todo)
            acc = sub[ok]
            zc[acc] = trial[ok]
            gbest[acc], Hbest[acc], gnbest[acc] = gt[ok], Ht[ok], gnt[ok]
            accepted[acc] = True
            lam[sub[~ok]] *= 0.5
        z[idx], g[idx], H[idx], gn[idx] = zc, gbest, Hbest, gnbest
        stalled = idx[~accepted]
        # a stalled line search at tiny gradient is rounding-limited: accept
        near = stalled[gn[stalled] < 1e3 * gtol]
        status[near] = 1
        far = stalled[gn[stalled] >= 1e3 * gtol]
        status[far], reason[far] = 2, "line search stalled"
        out = (status == 0) & ((z.real < x0) | (z.real > x1) | (z.imag < y0) | (z.imag > y1))
        status[out], reason[out] = 3, "left search box"
    reason[status == 0] = "iteration limit"
    status[status == 0] = 2
    return z, status, reason, gn


def _fit_degeneracy(pot: GravityPotential, p: complex, axis: np.ndarray, scale: float):
    """Lowest significant Taylor order of Pi along ``axis`` and its coefficient."""
    delta = 0.02 * scale
    s = np.linspace(-1.0, 1.0, 81)
    pts = p + delta * s * complex(axis[0], axis[1])
    vals = pot.value(pts, guard=False)
    coef = np.polynomial.polynomial.polyfit(s, vals - vals[len(s) // 2], 8)
    hi = np.abs(coef[3:])
    if hi.max() == 0.0:
        return 2, 0.0, axis
    m = 3 + int(np.argmax(hi > 0.1 * hi.max()))
    c = coef[m] / delta ** m
    beta = m * c
    if beta < 0 and m % 2 == 1:
        axis, beta = -axis, -beta
    return m, float(beta), axis


def find_critical_points(system_or_pot, search_box=None, grid: int = 32,
                         gtol: float = GRADIENT_TOL, extra_seeds=None,
                         merge_radius: float | None = None) -> CriticalPointReport:
    """All critical points of the potential inside ``search_box``.

    Seeds: a ``grid x grid`` lattice over the box plus each bubble centroid
    (and ``extra_seeds``). Failed seeds are returned, never dropped.
    """
    if isinstance(system_or_pot, GravityPotential):
        pot, system = system_or_pot, None
    else:
        system = system_or_pot
        pot = GravityPotential.of(system)
    if search_box is None:
        if system is None:
            raise ValueError("search_box is required for a bare potential")
        search_box = bounding_box(system, margin=0.25)
    (x0, x1), (y0, y1) = search_box
    if not (np.isfinite([x0, x1, y0, y1]).all() and x1 > x0 and y1 > y0):
        raise ValueError("search box must be bounded and non-empty")
    scale = max(x1 - x0, y1 - y0)
    gx = x0 + (np.arange(grid) + 0.5) * (x1 - x0) / grid
    gy = y0 + (np.arange(grid) + 0.5) * (y1 - y0) / grid
    X, Y = np.meshgrid(gx, gy)
    seeds = list((X + 1j * Y).ravel())
    if system is not None:
        seeds += [complex(*b.centroid) for b in system.bubbles]
    if extra_seeds is not None:
        seeds += list(_as_complex(extra_seeds))
    seeds = np.array(seeds)
    tol = gtol * max(1.0, np.sqrt(abs(pot.signed_area)))
    z, status, reason, gn = _newton(pot, seeds, search_box, tol)

    failures = [SeedFailure(np.array([s.real, s.imag]), str(reason[k]), np.array([z[k].real, z[k].imag]),
                            float(gn[k])) for k, s in enumerate(seeds) if status[k] == 2]
    found = z[status == 1]
    merge = merge_radius if merge_radius is not None else max(10 * gtol, 1e-4 * scale)
    reps: list[complex] = []
    for p in found:
        if not reps or np.min(np.abs(np.array(reps) - p)) > merge:
            reps.append(p)
    if not reps:
        return CriticalPointReport([], failures)
    reps_arr = np.array(reps)
    _, H = pot.grad_hess(reps_arr, guard=False)
    vals = pot.value(reps_arr, guard=False)
    pts = []
    for k, p in enumerate(reps_arr):
        w, V = np.linalg.eigh(H[k])
        order = np.argsort(np.abs(w))  # first axis: smallest |eigenvalue|
        w, V = w[order], V[:, order]
        big = np.abs(w).max()
        degenerate = big == 0 or abs(w[0]) / big < DEGENERACY_RATIO
        beta, m, axis0 = None, 2, V[:, 0]
        if degenerate:
            kind = "degenerate"
            m, beta, axis0 = _fit_degeneracy(pot, p, V[:, 0], scale)
            degree = (m + 1) // 2
        else:
            degree = 1
            kind = "minimum" if w.min() > 0 else "maximum" if w.max() < 0 else "saddle"
        pts.append(CriticalPoint(np.array([p.real, p.imag]), kind, degree, (float(w[0]), float(w[1])),
                                 (axis0, V[:, 1]), float(vals[k]), False, beta, m))
    cands = [k for k, q in enumerate(pts)
             if q.kind == "minimum" or (q.kind == "degenerate" and q.order % 2 == 0 and (q.beta or 0) > 0)]
    if cands:
        vmin = min(pts[k].value for k in cands)
        vtol = 1e-9 * max(1.0, abs(pot.signed_area))
        pts = [replace(q, is_global_min=True) if k in cands and q.value <= vmin + vtol else q
               for k, q in enumerate(pts)]
    return CriticalPointReport(pts, failures)


def bounding_box(system: BubbleSystem, margin: float = 0.0):
    v = np.vstack([b.vertices for b in system.bubbles])
    lo, hi = v.min(axis=0), v.max(axis=0)
    pad = margin * (hi - lo).max()
    return ((lo[0] - pad, hi[0] + pad), (lo[1] - pad, hi[1] + pad))


# ------------------------------------------------------------ breakup tests

@dataclass(frozen=True)
class BreakupIntegral:
    value: float
    verdict: str  # "breaks" | "no-conclusion"


def breakup_integral(profile, b: float | None = None, n: int = 1 << 15) -> BreakupIntegral:
    """``I = integral_0^b d(x sqrt f) / (x**2 + f)``; ``I > pi/2`` certifies breakup.

    ``profile`` is either a callable ``f`` or a pair ``(x, f)`` of samples on
    ``[0, b]``. The Stieltjes integral is evaluated after the substitution
    ``x = b sin(theta)``, which keeps ``x sqrt(f)`` smooth at a simple zero of
    ``f`` at ``b``, with a midpoint Stieltjes sum and one Richardson step.
    """
    if callable(profile):
        f = profile
        if b is None:
            raise ValueError("b is required with a callable profile")
    else:
        xs, fs = (np.asarray(a, dtype=float) for a in profile)
        if np.any(fs < 0):
            raise ValueError("profile has negative samples")
        b = float(xs[-1]) if b is None else b
        spline = CubicSpline(xs, fs)
        f = lambda x: np.maximum(spline(x), 0.0)  # noqa: E731

    def stieltjes(m: int) -> float:
        th = np.linspace(0.0, np.pi / 2, m + 1)
        x = b * np.sin(th)
        fx = np.asarray(f(x), dtype=float)
        if np.any(fx < -1e-14):
            raise ValueError("profile has negative samples")
        g = x * np.sqrt(np.maximum(fx, 0.0))
        xm = b * np.sin(0.5 * (th[1:] + th[:-1]))
        fm = np.maximum(np.asarray(f(xm), dtype=float), 0.0)
        return float(np.sum(np.diff(g) / (xm * xm + fm)))

    i1, i2 = stieltjes(n // 2), stieltjes(n)
    val = (4 * i2 - i1) / 3
    return BreakupIntegral(val, "breaks" if val > np.pi / 2 else "no-conclusion")


def _mirror(system: BubbleSystem, fn) -> list[np.ndarray]:
    return [fn(b.vertices) for b in system.bubbles]


def symmetry_defect(system: BubbleSystem, fn) -> float:
    """Largest Hausdorff distance from a mapped bubble to its nearest bubble."""
    worst = 0.0
    for img in _mirror(system, fn):
        img = img[::-1]  # reflections flip orientation; keep it counterclockwise
        if BoundaryCurve(img, degenerate=True).area < 0:
            img = img[::-1]
        worst = max(worst, min(hausdorff_distance(img, b.vertices) for b in system.bubbles))
    return worst


def _check_symmetry(system: BubbleSystem, fn, what: str, tol: float) -> None:
    if symmetry_defect(system, fn) > tol:
        raise SymmetryError(f"system is not {what}-symmetric within {tol:g}")


def _sym_tol(system: BubbleSystem) -> float:
    return 2.0 * max(b.perimeter / len(b) for b in system.bubbles)


def axis_extrema_count(system: BubbleSystem, n_scan: int = 4001, gtol: float | None = None) -> int:
    """Number of local extrema of ``x -> Pi(x, 0)`` for an x-axis-symmetric system."""
    _check_symmetry(system, lambda v: v * np.array([1.0, -1.0]), "axial", _sym_tol(system))
    pot = GravityPotential.of(system)
    (x0, x1), _ = bounding_box(system)
    w = x1 - x0
    xs = np.linspace(x0 - 0.5 * w, x1 + 0.5 * w, n_scan)
    gx = pot.gradient(xs + 0j, guard=False)[:, 0]
    if gtol is None:
        gtol = 1e-8 * np.sqrt(system.total_area)
    gx = gx[np.isfinite(gx)]
    sign = np.sign(np.where(np.abs(gx) < gtol, 0.0, gx))
    sign = sign[sign != 0]
    return int(np.count_nonzero(np.diff(sign) != 0))


def predict_breakup(system: BubbleSystem, symmetry=None) -> str:
    """Sufficient breakup test for symmetric bubbles.

    ``symmetry`` is ``None``, ``("central", P)`` or ``("axial", (P, direction))``.
    Returns ``"breaks"`` or ``"no-conclusion"``.
    """
    if symmetry is None:
        return "no-conclusion"
    kind, data = symmetry
    tol = _sym_tol(system)
    report = find_critical_points(system)
    mins = report.global_minima
    if kind == "central":
        P = np.asarray(data, dtype=float)
        _check_symmetry(system, lambda v: 2 * P - v, "central", tol)
        off = [m for m in mins if np.linalg.norm(m.location - P) > tol]
        return "breaks" if off else "no-conclusion"
    if kind == "axial":
        P, direction = (np.asarray(a, dtype=float) for a in data)
        u = direction / np.linalg.norm(direction)
        rot = np.array([[u[0], u[1]], [-u[1], u[0]]])  # maps the line direction to +x

        def to_frame(v):
            return (v - P) @ rot.T

        framed = BubbleSystem(tuple(BoundaryCurve(to_frame(b.vertices)) for b in system.bubbles),
                              system.time, system.labels)
        _check_symmetry(framed, lambda v: v * np.array([1.0, -1.0]), "axial", tol)
        off = [m for m in mins if abs(to_frame(m.location[None])[0, 1]) > tol]
        if off or axis_extrema_count(framed) > 1:
            return "breaks"
        return "no-conclusion"
    raise ValueError(f"unknown symmetry kind {kind!r}")
