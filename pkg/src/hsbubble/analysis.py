"""Post-processing on top of the potential and evolution modules.

Contraction points, the two-disk partial contraction solved through the
Kufarev map, the phase-rectangle accessibility map, the synchronizing
search, asymptotic shape fits and family sweeps.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .conformal import MapError, kufarev_solve, limit_curve, saddle_node_curve, trace_boundary
from .evolution import (EvolutionError, _cusp_metric, FluxSpec, Numerics, Strategy, Trajectory, run_free,
                        run_regulated, solve_field)
from .geometry import (BoundaryCurve, BubbleSystem, GeometryError, as_vertices, cusp_exponent, diameter,
                       hausdorff_distance, normalize_for_asymptotics, point_segment_distances,
                       resample)
from .potential import (GravityPotential, CriticalPoint, breakup_integral, find_critical_points)
from .shapes import disk

log = logging.getLogger(__name__)

FIT_POINTS = 256


class AnalysisError(RuntimeError):
    pass


# ------------------------------------------------------------ report types

@dataclass(frozen=True)
class PhasePoint:
    X: float
    Y: float
    S1: float
    S2: float

    def __post_init__(self) -> None:
        tol = 1e-12 * max(self.S1, self.S2)
        if not (-tol <= self.X <= self.S1 + tol and -tol <= self.Y <= self.S2 + tol):
            raise ValueError(f"phase point ({self.X}, {self.Y}) outside [0,{self.S1}]x[0,{self.S2}]")

    @property
    def extracted(self) -> tuple[float, float]:
        return self.S1 - self.X, self.S2 - self.Y


@dataclass
class FitReport:
    model: str
    parameters: dict
    residuals: np.ndarray  # one entry per snapshot used
    times: np.ndarray
    passed: bool
    tolerance: float
    detail: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"model": self.model, "parameters": _plain(self.parameters),
                "residuals": [float(r) for r in self.residuals],
                "times": [float(t) for t in self.times], "passed": bool(self.passed),
                "tolerance": float(self.tolerance), "detail": _plain(self.detail)}


@dataclass
class FamilySweepReport:
    samples: list[tuple[float, bool]]  # (s, breaks)
    sigma: float | None
    bracket: tuple[float, float] | None
    monotone: bool
    cusp: dict | None = None
    criterion: list[tuple[float, str]] = field(default_factory=list)

    def to_record(self) -> dict:
        return {"samples": [{"s": float(s), "breaks": bool(b)} for s, b in self.samples],
                "sigma": self.sigma, "bracket": list(self.bracket) if self.bracket else None,
                "monotone": self.monotone, "cusp": _plain(self.cusp),
                "criterion": [{"s": float(s), "verdict": v} for s, v in self.criterion]}


@dataclass
class RegionMap:
    S1: float
    S2: float
    status: np.ndarray  # (n, n) of accessible | inaccessible | boundary | unknown; [i, j] ~ (X_i, Y_j)
    X: np.ndarray  # cell centres
    Y: np.ndarray
    ray_weights: np.ndarray
    ray_reach: np.ndarray  # fraction of the ray to the rectangle edge actually travelled
    ray_termination: list[str]
    free_path: np.ndarray
    origin_accessible: bool
    refined: np.ndarray  # cells whose verdict rests on a cusp-terminated ray

    @property
    def resolution(self) -> int:
        return len(self.X)

    def witness(self, i: int, j: int) -> Strategy:
        """A proportional-path strategy reaching cell ``(i, j)``."""
        if self.status[i, j] != "accessible":
            raise ValueError(f"cell ({i}, {j}) is {self.status[i, j]}")
        d1, d2 = self.S1 - self.X[i], self.S2 - self.Y[j]
        return Strategy.from_volumes([(d1, d2)])

    def diagonal_defect(self) -> int:
        """Cells whose status differs from the mirrored cell."""
        return int((self.status != self.status.T).sum())

    def records(self) -> list[dict]:
        n = self.resolution
        return [{"i": i, "j": j, "X": float(self.X[i]), "Y": float(self.Y[j]), "status": str(self.status[i, j])}
                for i in range(n) for j in range(n)]


@dataclass(frozen=True)
class ContractionPoint:
    point: np.ndarray
    time: float
    kind: str  # complete | partial
    label: int
    minimum: np.ndarray | None = None  # nearest minimum of the accumulated potential
    distance: float = np.nan
    level_gap: float = np.nan  # value at the minimum minus the value on the remaining bubbles
    gradient_norm: float = np.nan

    def to_record(self) -> dict:
        rec = {"x": float(self.point[0]), "y": float(self.point[1]), "t": float(self.time),
               "kind": self.kind, "label": int(self.label), "distance": float(self.distance),
               "level_gap": float(self.level_gap)}
        if self.minimum is not None:
            rec.update(min_x=float(self.minimum[0]), min_y=float(self.minimum[1]))
        return rec


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


# ------------------------------------------------------- contraction points

def _real_labels(traj: Trajectory) -> set[int]:
    return {lab for s in traj.snapshots for lab in s.labels}


def _remaining_after(traj: Trajectory, label: int) -> BubbleSystem | None:
    seen = False
    for s in traj.snapshots:
        if label in s.labels:
            seen = True
        elif seen:
            return s
    return None


def _nearest_minimum(pot: GravityPotential, point: np.ndarray, half: float, exclude: BubbleSystem | None):
    box = ((point[0] - half, point[0] + half), (point[1] - half, point[1] + half))
    rep = find_critical_points(pot, box, grid=6, extra_seeds=[point])
    best = None
    for cp in rep.points:
        if cp.kind not in ("minimum", "degenerate"):
            continue
        if exclude is not None and exclude.contains(cp.location[None, :])[0]:
            continue
        d = float(np.hypot(*(cp.location - point)))
        if best is None or d < best[1]:
            best = (cp, d)
    return best


def contraction_points(traj: Trajectory, check: bool = True, complete_fraction: float = 0.01
                       ) -> list[ContractionPoint]:
    """Disappearance points of a finished trajectory, labelled complete or partial.

    A point is complete when the bubbles left behind hold less than
    ``complete_fraction`` of the initial area. With ``check`` each point is
    compared to the nearest minimum of the accumulated potential
    ``Pi_B(0) - Pi_B(t)``.
    """
    if traj.termination == "cusp":
        raise AnalysisError("trajectory terminated at a cusp; contraction points are undefined")
    if traj.termination not in ("completed", "bubble_vanished"):
        raise AnalysisError(f"trajectory did not run to extraction (termination={traj.termination})")
    b0 = traj.snapshots[0]
    s0 = b0.total_area
    real = _real_labels(traj)
    out = []
    for ev in sorted(traj.events_of("disappearance"), key=lambda e: e.time):
        lab = ev.labels[0]
        if lab not in real:
            continue  # sub-resolution crumb cut off by surgery
        rest = _remaining_after(traj, lab)
        rest_area = rest.total_area if rest is not None else 0.0
        kind = "complete" if rest_area < complete_fraction * s0 else "partial"
        p = np.array(ev.location, dtype=float)
        cp = ContractionPoint(p, float(ev.time), kind, lab)
        if check:
            inner = rest if (rest is not None and kind == "partial") else None
            pot = GravityPotential.difference(b0, inner)
            half = max(20 * traj.h, 0.05 * np.sqrt(s0))
            found = _nearest_minimum(pot, p, half, inner)
            if found is not None:
                m, d = found
                gap = np.nan
                if inner is not None:
                    ref = np.array([b.centroid for b in inner.bubbles])
                    inside = pot.value(ref[:, 0] + 1j * ref[:, 1], guard=False)
                    gap = float(m.value - inside.min())
                else:
                    gap = 0.0
                g = float(np.linalg.norm(pot.gradient(m.location[None, :], guard=False)[0]))
                cp = replace(cp, minimum=m.location, distance=d, level_gap=gap, gradient_norm=g)
        out.append(cp)
    return out


# ------------------------------------------------------- Kufarev partial

@dataclass(frozen=True)
class KufarevPartial:
    point: np.ndarray
    tau: float
    formula_time: float
    residual: float


def _kufarev_gap(a, R, r, q, t_phys, n, base):
    tf = t_phys + np.pi * r * r / q
    kmap = kufarev_solve(a, R, r, q, tf)
    bt = trace_boundary(kmap, n)
    if bt.degenerate:
        raise MapError("Kufarev image is not simple")
    pot = GravityPotential(list(base) + [bt], [1.0, 1.0, -1.0])
    xr = float(bt.vertices[:, 0].max())
    lo, hi = xr + 0.05 * (a - xr), a + r

    def val(x):
        return pot.value(np.array([x + 0j]), guard=False)[0]

    # the profile rises away from the survivor before dipping near the small
    # bubble; take the grid's local minimum closest to it, then refine
    xs = np.linspace(lo, hi, 65)
    vs = pot.value(xs + 0j, guard=False)
    loc = [k for k in range(1, 64) if vs[k] <= vs[k - 1] and vs[k] <= vs[k + 1]]
    if not loc:
        raise MapError("no interior minimum on the axis between the bubbles")
    k = loc[int(np.argmin(np.abs(xs[loc] - a)))]
    res = minimize_scalar(val, bounds=(xs[k - 1], xs[k + 1]), method="bounded", options={"xatol": 1e-11})
    x0 = float(res.x)
    if not (xs[k - 1] + 1e-9 < x0 < xs[k + 1] - 1e-9):
        raise MapError("inner minimum runs into the bracket end")

    def gx(x):
        return pot.gradient(np.array([[x, 0.0]]), guard=False)[0, 0]

    w = 1e-3 * (hi - lo)
    a0, a1 = max(lo, x0 - w), min(hi, x0 + w)
    if gx(a0) < 0 < gx(a1):
        x0 = brentq(gx, a0, a1, xtol=1e-14, rtol=1e-15)
    c = bt.centroid
    inside = pot.value(np.array([complex(c[0], c[1])]), guard=False)[0]
    return val(x0) - inside, x0, tf


def kufarev_partial(a: float, R: float, r: float, q: float = 1.0, n: int = 4096, scan: int = 32
                    ) -> KufarevPartial:
    """Partial contraction point and time for disks ``|z| < R`` and ``|z - a| < r``.

    For each trial time the surviving bubble is the Kufarev image; the
    inner solve locates the minimum of the accumulated potential on the
    axis between the bubbles, and the outer root makes its value equal to
    the constant on the surviving bubble.
    """
    if not (R > r > 0 and a > R + r and q > 0):
        raise ValueError("need R > r > 0, a > R + r, q > 0")
    base = [disk((0.0, 0.0), R, n), disk((a, 0.0), r, n)]
    t_star = np.pi * (R * R + r * r) / q
    ts = np.linspace(0.02, 0.98, scan) * t_star
    prev = None
    for t in ts:
        try:
            g, _, _ = _kufarev_gap(a, R, r, q, t, n, base)
        except (MapError, GeometryError, ValueError):
            prev = None
            continue
        if prev is not None and prev[1] < 0 <= g:
            t0, t1 = prev[0], t
            tau = brentq(lambda s: _kufarev_gap(a, R, r, q, s, n, base)[0], t0, t1, xtol=1e-12, rtol=1e-13)
            g, x0, tf = _kufarev_gap(a, R, r, q, tau, n, base)
            return KufarevPartial(np.array([x0, 0.0]), float(tau), float(tf), float(g))
        prev = (t, g)
    raise AnalysisError("no partial-contraction root inside the validity window of the Kufarev map")


# --------------------------------------------------------------- slowdown

def greens_ratio(domain, point, numerics: Numerics | None = None) -> float:
    """``exp(2 pi Phi(P) / q)`` for the single-bubble free field; lies in (0, 1)."""
    if isinstance(domain, BubbleSystem):
        system = domain
    else:
        system = BubbleSystem((domain if isinstance(domain, BoundaryCurve) else BoundaryCurve(as_vertices(domain)),))
    p = np.asarray(point, dtype=float).reshape(1, 2)
    if system.contains(p)[0]:
        raise ValueError("point lies inside the domain")
    v = np.vstack([b.vertices for b in system.bubbles])
    seg = min(np.linalg.norm(np.roll(b.vertices, -1, 0) - b.vertices, axis=1).max() for b in system.bubbles)
    if np.min(np.linalg.norm(v - p, axis=1)) < 2 * seg:
        raise ValueError("point is on the boundary")
    sol = solve_field(system, FluxSpec.free(1.0), numerics)
    phi = float(sol.phi(p)[0])
    return float(np.exp(2 * np.pi * phi))


def fit_logslow(traj: Trajectory, label: int, n: int = 1, decade: float = 10.0, tol: float = 0.15,
                numerics: Numerics | None = None) -> FitReport:
    """Check the logarithmic slowdown of a bubble vanishing before ``t*``.

    ``b`` comes from :func:`greens_ratio` on the surviving bubbles and the
    disappearance point; nothing is fitted. Ratios are taken over the last
    resolvable ``decade`` of ``tau = t' - t``.
    """
    evs = [e for e in traj.events_of("disappearance") if e.labels[0] == label]
    if not evs:
        raise AnalysisError(f"bubble {label} never disappears")
    ev = evs[0]
    rest = _remaining_after(traj, label)
    if rest is None or len(rest) == 0:
        raise AnalysisError("no surviving bubble: contraction is complete, not partial")
    b = greens_ratio(rest, ev.location, numerics)
    q = sum(traj.fluxes[0].values())
    t_prime = ev.time
    t = traj.times
    area = traj.areas(label)
    flux = traj.flux_history(label)
    ok = np.isfinite(area) & (t < t_prime)
    tau = t_prime - t[ok]
    if len(tau) < 4:
        raise AnalysisError("too few snapshots near the partial-contraction time")
    tau_min = tau.min()
    sel = tau <= decade * tau_min
    if sel.sum() < 4:
        raise AnalysisError("too few snapshots in the last decade")
    lb = np.log(b)
    ratio_q = flux[ok][sel] * np.log(tau[sel]) / (2 * n * q * lb)
    ratio_a = area[ok][sel] * np.log(tau[sel]) / (2 * n * q * tau[sel] * lb)
    ratio_log_area = flux[ok][sel] * np.log(area[ok][sel]) / (2 * n * q * lb)
    resid = np.maximum(np.abs(ratio_q - 1), np.abs(ratio_a - 1))
    order = np.argsort(-tau[sel])
    passed = bool(np.all(np.abs(ratio_q - 1) <= tol))
    return FitReport("logarithmic-slowdown", {"b": b, "log_b": lb, "q": q, "n": n, "t_prime": t_prime,
                                              "tau_range": [float(tau_min), float(decade * tau_min)]},
                     resid[order], t[ok][sel][order], passed, tol,
                     {"ratio_flux": ratio_q[order], "ratio_area": ratio_a[order],
                      "ratio_flux_log_area": ratio_log_area[order], "tau": tau[sel][order]})


# ----------------------------------------------------- accessibility region

def _ray_run(system: BubbleSystem, w: float, numerics: Numerics):
    """Extract along the proportional ray with weights ``(w, 1 - w)``."""
    S1, S2 = system.areas
    caps = [S1 / w if w > 0 else np.inf, S2 / (1 - w) if w < 1 else np.inf]
    dur = (1 - 1e-9) * min(caps)
    strat = Strategy.constant(w, 1 - w, dur)
    try:
        traj = run_regulated(system, strat, numerics=numerics)
    except (EvolutionError, GeometryError) as exc:
        log.warning("ray w=%.4g failed: %s", w, exc)
        return np.nan, "unknown"
    if traj.termination in ("completed", "bubble_vanished", "strategy_exhausted"):
        return 1.0, traj.termination
    done = traj.total_time - system.time
    return float(done / dur), traj.termination


def free_path(system: BubbleSystem, numerics: Numerics | None = None) -> np.ndarray:
    """Phase-plane polyline ``(X, Y)`` of free contraction until a bubble vanishes."""
    labels = system.labels
    traj = run_free(system, 1.0, numerics=numerics)
    pts = [(s.bubble(labels[0]).area, s.bubble(labels[1]).area) for s in traj.snapshots
           if labels[0] in s.labels and labels[1] in s.labels]
    gone = traj.events_of("disappearance")
    if gone:
        # bubbles vanishing within one step of the first are simultaneous
        t0 = gone[0].time
        dt = traj.times[-1] - traj.times[-2] if len(traj.times) > 1 else 0.0
        ended = {l for e in gone if e.time - t0 <= dt for l in e.labels}
        last = pts[-1]
        pts.append(tuple(0.0 if l in ended else a for l, a in zip(labels, last)))
    return np.array(pts)


def accessibility_region(system: BubbleSystem, grid_n: int = 16, numerics: Numerics | None = None,
                         rays: int | None = None, with_free_path: bool = True) -> RegionMap:
    """Classify the phase rectangle by proportional extraction along rays.

    Every ray from ``(S1, S2)`` runs until the rectangle edge or a cusp; a
    cell is accessible when its distance along the ray is below the reach.
    """
    if len(system) != 2:
        raise ValueError("accessibility needs exactly two bubbles")
    if grid_n < 16:
        raise ValueError("grid_n must be >= 16")
    numerics = numerics or Numerics()
    S1, S2 = system.areas
    n_rays = rays if rays is not None else grid_n + 1
    ws = np.linspace(0.0, 1.0, n_rays)
    reach = np.empty(n_rays)
    term = []
    for k, w in enumerate(ws):
        reach[k], tk = _ray_run(system, float(w), numerics)
        term.append(tk)
    X = (np.arange(grid_n) + 0.5) * S1 / grid_n
    Y = (np.arange(grid_n) + 0.5) * S2 / grid_n
    status = np.empty((grid_n, grid_n), dtype=object)
    refined = np.zeros((grid_n, grid_n), dtype=bool)
    cut = np.array([t == "cusp" for t in term])
    for i in range(grid_n):
        for j in range(grid_n):
            d1, d2 = S1 - X[i], S2 - Y[j]
            wc = d1 / (d1 + d2)
            edge = min(S1 / wc if wc > 0 else np.inf, S2 / (1 - wc) if wc < 1 else np.inf)
            frac = (d1 + d2) / edge
            k = int(np.clip(np.searchsorted(ws, wc), 1, n_rays - 1))
            r0, r1 = reach[k - 1], reach[k]
            if not (np.isfinite(r0) and np.isfinite(r1)):
                status[i, j] = "unknown"
                continue
            lam = (wc - ws[k - 1]) / (ws[k] - ws[k - 1])
            r = (1 - lam) * r0 + lam * r1
            margin = 0.5 * (S1 + S2) / grid_n / edge
            if min(r0, r1) >= 1.0 or frac < r - margin:
                status[i, j] = "accessible"
            elif frac > r + margin:
                status[i, j] = "inaccessible"
            else:
                status[i, j] = "boundary"
            refined[i, j] = bool(cut[k - 1] or cut[k])
    origin = any(t == "completed" for t in term)
    path = free_path(system, numerics) if with_free_path else np.zeros((0, 2))
    return RegionMap(S1, S2, status, X, Y, ws, reach, term, path, origin, refined)


def fit_free_path_tangency(path: np.ndarray, axis: str = "X") -> dict:
    """Compare ``Y - a = c X log(1/X)`` with a straight line near the endpoint.

    ``path`` approaches the Y axis (``axis="X"``) or the X axis.  Each model
    fits its slope together with the intercept ``a``; residuals are rms over
    the last decade of the vanishing coordinate.
    """
    p = np.asarray(path, dtype=float)
    u, v = (p[:, 0], p[:, 1]) if axis == "X" else (p[:, 1], p[:, 0])
    pos = u > 0
    if not pos.any():
        raise AnalysisError("path never leaves the axis")
    m = pos & (u <= 10 * u[pos].min())
    x, y = u[m], v[m]
    if len(x) < 3:
        raise AnalysisError("too few path points in the last decade")

    def lsq(basis):
        M = np.column_stack([np.ones_like(x), basis])
        coef = np.linalg.lstsq(M, y, rcond=None)[0]
        return coef, float(np.sqrt(np.mean((y - M @ coef) ** 2)))

    (a_log, c_log), r_log = lsq(x * np.log(1 / x))
    (a_lin, c_lin), r_lin = lsq(x)
    c_log, c_lin = float(c_log), float(c_lin)
    return {"c_log": c_log, "c_lin": c_lin, "residual_log": r_log, "residual_lin": r_lin,
            "log_wins": r_log < r_lin, "points": int(len(x)),
            "a_log": float(a_log), "a_lin": float(a_lin)}


def fit_power_boundary(X, Y) -> tuple[float, float]:
    """Fit ``Y = c X**p``; returns ``(p, c)``."""
    X, Y = np.asarray(X, float), np.asarray(Y, float)
    m = (X > 0) & (Y > 0)
    if m.sum() < 3:
        raise AnalysisError("need three positive samples")
    p, lc = np.polyfit(np.log(X[m]), np.log(Y[m]), 1)
    return float(p), float(np.exp(lc))


def region_upper_boundary(region: RegionMap) -> np.ndarray:
    """Per column ``X_i``: the largest ``Y`` still accessible (nan if none)."""
    out = np.full(region.resolution, np.nan)
    for i in range(region.resolution):
        acc = np.nonzero(region.status[i] == "accessible")[0]
        if len(acc):
            out[i] = region.Y[acc.max()]
    return out


# ------------------------------------------------------- synchronization

@dataclass
class SyncReport:
    strategy: Strategy | None
    free: bool
    crossing: float | None
    endpoints: list[dict]
    simultaneous: bool
    gradient_ok: bool
    detail: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        return {"found": self.strategy is not None, "free": self.free, "crossing": self.crossing,
                "endpoints": _plain(self.endpoints), "simultaneous": self.simultaneous,
                "gradient_ok": self.gradient_ok, "detail": _plain(self.detail),
                "strategy": None if self.strategy is None else
                {"breakpoints": list(self.strategy.breakpoints), "rates": [list(r) for r in self.strategy.rates]}}


def _flux_strategy(traj: Trajectory, labels) -> Strategy:
    """Piecewise-constant rates read off a free trajectory."""
    t = traj.times - traj.times[0]
    bp, rates = [0.0], []
    for k in range(len(t) - 1):
        if t[k + 1] <= bp[-1]:
            continue
        f = traj.fluxes[k]
        rates.append((max(f.get(labels[0], 0.0), 0.0), max(f.get(labels[1], 0.0), 0.0)))
        bp.append(float(t[k + 1]))
    if not rates:
        raise AnalysisError("free leg too short to express as a schedule")
    return Strategy(tuple(bp), tuple(rates))


def _endpoint_side(system: BubbleSystem, numerics: Numerics):
    """Free run; returns (+1 if bubble 1 vanishes first, -1 if bubble 2, 0 if together), trajectory."""
    traj = run_free(system, 1.0, numerics=numerics)
    l1, l2 = system.labels
    vanish_area = (numerics.vanish_factor * traj.h) ** 2
    evs = {e.labels[0]: e for e in traj.events_of("disappearance")}
    if l1 not in evs or l2 not in evs:
        raise AnalysisError("free run did not extinguish both bubbles")
    first = l1 if evs[l1].time <= evs[l2].time else l2
    other = l2 if first == l1 else l1
    # area of the other bubble at the first disappearance
    rest = _remaining_after(traj, first)
    left = rest.bubble(other).area if (rest is not None and other in rest.labels) else 0.0
    if left <= vanish_area:
        return 0, traj
    return (1 if first == l1 else -1), traj


def _endpoint_checks(b0: BubbleSystem, traj: Trajectory) -> tuple[list[dict], bool]:
    pot = GravityPotential.of(b0)
    S = b0.total_area
    out, ok = [], True
    for ev in sorted(traj.events_of("disappearance"), key=lambda e: e.labels[0]):
        p = np.array(ev.location, dtype=float)
        inside = bool(b0.contains(p[None, :])[0])
        g, H = pot.grad_hess(p[None, :], guard=False)
        gn = float(np.linalg.norm(g[0]))
        w = np.linalg.eigvalsh(H[0])
        rec = {"label": ev.labels[0], "x": p[0], "y": p[1], "t": ev.time, "gradient_norm": gn,
               "in_initial": inside, "eigenvalues": w.tolist(),
               "hessian_class": "positive-definite" if w.min() > 0 else "indefinite" if w.max() > 0 else "negative"}
        if not inside:
            rec["note"] = "endpoint outside the initial domain"
        found = _nearest_minimum(pot, p, 0.05 * np.sqrt(S), None)
        if found is not None:
            m = found[0]
            rec.update(refined_x=float(m.location[0]), refined_y=float(m.location[1]),
                       refined_eigenvalues=list(m.hessian_eigenvalues), refined_shift=found[1])
        ok &= gn < 1e-3 * np.sqrt(S)
        out.append(rec)
    return out, bool(ok)


def find_synchronizing(system: BubbleSystem, numerics: Numerics | None = None, max_iter: int = 24
                       ) -> SyncReport:
    """Search for an extraction schedule extinguishing both bubbles together.

    Candidates: proportional extraction to a point on the anti-diagonal
    ``X/S1 + Y/S2 = 1/2``, then free contraction. Bisection on the crossing
    parameter uses which bubble vanishes first.
    """
    if len(system) != 2:
        raise ValueError("synchronization needs exactly two bubbles")
    numerics = numerics or Numerics()
    labels = system.labels
    S1, S2 = system.areas
    side, traj = _endpoint_side(system, numerics)
    if side == 0:
        strat = _flux_strategy(traj, labels)
        eps, ok = _endpoint_checks(system, traj)
        return SyncReport(strat, True, None, eps, True, ok)

    def candidate(s: float):
        # s in [0, 1]: X = s*S1/2, Y = (1-s)*S2/2 on the anti-diagonal
        d1, d2 = S1 - s * S1 / 2, S2 - (1 - s) * S2 / 2
        lead = Strategy.from_volumes([(d1, d2)])
        t1 = run_regulated(system, lead, numerics=numerics)
        if t1.termination != "strategy_exhausted":
            raise AnalysisError(f"leg to crossing {s:.4g} ended with {t1.termination}")
        mid = t1.snapshots[-1]
        sd, t2 = _endpoint_side(mid, numerics)
        return sd, lead, t2

    lo, hi = 0.0, 1.0
    try:
        s_lo = candidate(lo + 1e-3)[0]
        s_hi = candidate(hi - 1e-3)[0]
    except (AnalysisError, EvolutionError, GeometryError) as exc:
        return SyncReport(None, False, None, [], False, False, {"reason": str(exc)})
    if s_lo == 0 or s_hi == 0 or s_lo != s_hi:
        lo, hi = lo + 1e-3, hi - 1e-3
        for _ in range(max_iter):
            mid = 0.5 * (lo + hi)
            try:
                sd, lead, t2 = candidate(mid)
            except (AnalysisError, EvolutionError, GeometryError) as exc:
                return SyncReport(None, False, mid, [], False, False, {"reason": str(exc)})
            if sd == 0:
                strat = lead.concatenate(_flux_strategy(t2, labels))
                eps, ok = _endpoint_checks(system, t2)
                return SyncReport(strat, False, mid, eps, True, ok)
            if sd == s_lo:
                lo = mid
            else:
                hi = mid
    return SyncReport(None, False, None, [], False, False, {"reason": "no sign change along the anti-diagonal"})


# ----------------------------------------------------------- shape fits

def fit_conic(points) -> dict:
    """Least-squares ellipse through ``points``: centre, half-axes, major-axis direction."""
    p = as_vertices(points) if not isinstance(points, np.ndarray) else np.asarray(points, float)
    x, y = p[:, 0], p[:, 1]
    M = np.column_stack([x * x, x * y, y * y, x, y])
    coef, *_ = np.linalg.lstsq(M, np.ones_like(x), rcond=None)
    a, b, c, d, e = coef
    Q = np.array([[a, b / 2], [b / 2, c]])
    center = np.linalg.solve(2 * Q, [-d, -e])
    k = 1 + center @ Q @ center
    w, V = np.linalg.eigh(Q / k)
    if w.min() <= 0:
        raise AnalysisError("points are not on an ellipse")
    half = 1 / np.sqrt(w)  # ascending eigenvalue -> major axis first
    return {"center": center, "major": float(half[0]), "minor": float(half[1]), "direction": V[:, 0]}


def _fit_points(curve, n: int = FIT_POINTS) -> np.ndarray:
    v = as_vertices(curve)
    L = np.linalg.norm(np.roll(v, -1, 0) - v, axis=1).sum()
    return resample(BoundaryCurve(v, degenerate=True), L / n).vertices


def fit_ellipse_asymptotics(traj: Trajectory, label: int, hessian, k: int = 10,
                            angle_tol: float = 5.0, ratio_tol: float = 0.05) -> FitReport:
    """Terminal ellipse of one bubble against the potential Hessian at its limit point."""
    H = np.asarray(hessian, float)
    w, V = np.linalg.eigh(H)
    if w.min() <= 0 or w.min() / w.max() < 1e-3:
        raise AnalysisError("Hessian must be positive definite and nondegenerate")
    expected = w.max() / w.min()
    major_dir = V[:, 0]  # major axis along the smaller eigenvalue
    snaps = [s for s in traj.snapshots if label in s.labels][-k:]
    if len(snaps) < 2:
        raise AnalysisError("too few snapshots")
    resid, ratios, angles, times = [], [], [], []
    for s in snaps:
        cv = s.bubble(label)
        v = cv.vertices - cv.centroid
        v = 2 * v / diameter(v)
        fit = fit_conic(_fit_points(v))
        ratio = fit["major"] / fit["minor"]
        ang = np.degrees(np.arccos(min(1.0, abs(float(fit["direction"] @ major_dir)))))
        if expected < 1 + 1e-3:
            ang = 0.0  # a circle has no preferred axis
        ratios.append(ratio)
        angles.append(ang)
        resid.append(abs(ratio / expected - 1))
        times.append(s.time)
    resid = np.array(resid)
    passed = bool(angles[-1] < angle_tol and resid[-1] < ratio_tol and resid[-1] <= resid[0] + ratio_tol / 10)
    return FitReport("ellipse", {"expected_ratio": expected, "ratio": ratios[-1], "angle_deg": angles[-1]},
                     resid, np.array(times), passed, ratio_tol,
                     {"ratios": ratios, "angles_deg": angles})


def fit_limit_curve(curves, n: float, beta: float, alpha: float = 0.0, kind: str = "degenerate",
                    center=(0.0, 0.0), times=None, label: int | None = None, tol: float = 0.05,
                    critical: CriticalPoint | None = None) -> FitReport:
    """Rescaled boundaries against a degenerate-point limit curve.

    ``curves`` is a trajectory (``label`` selects the bubble) or a sequence
    of boundary curves ordered towards extinction. ``kind="saddle"`` uses the
    saddle-node limit, for which the vertical exponent is 3/2.
    """
    if critical is not None:
        if kind == "degenerate" and (critical.kind != "degenerate" or critical.degree != int(n)):
            raise AnalysisError(f"critical point is {critical.kind} of degree {critical.degree}, not {n}")
    if isinstance(curves, Trajectory):
        lab = label if label is not None else curves.snapshots[0].labels[0]
        snaps = [s for s in curves.snapshots if lab in s.labels]
        cs = [s.bubble(lab) for s in snaps]
        ts = np.array([s.time for s in snaps])
    else:
        cs = list(curves)
        ts = np.arange(len(cs), dtype=float) if times is None else np.asarray(times, float)
    if kind == "saddle":
        target = saddle_node_curve(beta, 4096)
        power = 1.5
    else:
        target = limit_curve(int(n), beta, alpha, 4096)
        power = n
    c0 = np.asarray(center, float)
    tpts = _fit_points(target)
    resid = []
    for c in cs:
        v = as_vertices(c) - c0
        nc = normalize_for_asymptotics(v, power, alpha, measure="width")
        # sup over 256 samples of each curve, measured against the other dense curve
        d1 = point_segment_distances(_fit_points(nc), target.vertices).max()
        d2 = point_segment_distances(tpts, nc.vertices).max()
        resid.append(float(max(d1, d2)))
    resid = np.array(resid)
    decreasing = bool(np.all(np.diff(resid) <= 1e-12))
    passed = bool(resid[-1] < tol and decreasing)
    return FitReport("saddle-node" if kind == "saddle" else f"degenerate-n{n}",
                     {"n": n, "beta": beta, "alpha": alpha, "final": float(resid[-1])},
                     resid, ts, passed, tol, {"decreasing": decreasing})


# ----------------------------------------------------- family sweeps

def breaks_in_simulation(traj: Trajectory) -> bool:
    return any(e.detail.get("pieces", 2) >= 2 for e in traj.events_of("breakup"))


def rupture_boundary_sweep(family: Callable[[float], BubbleSystem], s_range: tuple[float, float],
                           numerics: Numerics | None = None, tol: float = 1e-3, coarse: int = 5,
                           refine: Numerics | None = None, profile: Callable | None = None,
                           q: float = 1.0) -> FamilySweepReport:
    """Locate the breaks / no-breaks transition of a one-parameter family.

    ``profile(s)`` (optional) returns ``(f, b)`` for the sufficient
    quadrature criterion, reported alongside the simulation verdicts.
    """
    numerics = numerics or Numerics()
    s0, s1 = map(float, s_range)
    cache: dict[float, bool] = {}

    def verdict(s: float) -> bool:
        if s not in cache:
            cache[s] = breaks_in_simulation(run_free(family(s), q, numerics=numerics))
            log.info("sweep s=%.6g breaks=%s", s, cache[s])
        return cache[s]

    grid = np.linspace(s0, s1, coarse)
    vs = [verdict(float(s)) for s in grid]
    flips = [k for k in range(coarse - 1) if vs[k] != vs[k + 1]]
    criterion = []
    if profile is not None:
        for s in grid:
            f, b = profile(float(s))
            criterion.append((float(s), breakup_integral(f, b).verdict))
    if len(flips) != 1:
        return FamilySweepReport(sorted(cache.items()), None, None, False, None, criterion)
    lo, hi = float(grid[flips[0]]), float(grid[flips[0] + 1])
    v_lo = vs[flips[0]]
    while hi - lo > tol * (s1 - s0):
        mid = 0.5 * (lo + hi)
        if verdict(mid) == v_lo:
            lo = mid
        else:
            hi = mid
    sigma = 0.5 * (lo + hi)
    samples = sorted(cache.items())
    vv = [v for _, v in samples]
    monotone = sum(vv[k] != vv[k + 1] for k in range(len(vv) - 1)) == 1
    ref = refine or replace(numerics, h_factor=numerics.h_factor / 2)
    cusp = None
    try:
        traj = run_free(family(sigma), q, numerics=ref)
        evs = [e for e in traj.events_of("cusp") if "exponent" in e.detail]
        if evs:
            best = max(evs, key=lambda e: e.detail["exponent"])
            cusp = {"time": best.time, "x": best.location[0], "y": best.location[1],
                    "exponent": best.detail["exponent"], "is_cusp": best.detail.get("is_cusp"),
                    "relaxed_after_steps": best.detail.get("relaxed_after_steps"),
                    "events": len(traj.events_of("cusp")), "breaks": breaks_in_simulation(traj)}
        else:
            cusp = {"events": 0, "breaks": breaks_in_simulation(traj), **_peak_curvature_fit(traj)}
    except (EvolutionError, GeometryError) as exc:
        cusp = {"error": str(exc)}
    return FamilySweepReport(samples, sigma, (lo, hi), monotone, cusp, criterion)


def _peak_curvature_fit(traj: Trajectory) -> dict:
    """Exponent fit at the sharpest boundary point of the whole run."""
    k = int(np.argmax(traj.cusp_metric))
    snap = traj.snapshots[k]
    best = None
    for b in snap.bubbles:
        z = b.z
        m, node = _cusp_metric(z)
        if best is None or m > best[0]:
            best = (m, b.vertices, node)
    m, v, node = best
    out = {"max_metric": float(m), "time": float(snap.time), "x": float(v[node, 0]), "y": float(v[node, 1])}
    try:
        fit = cusp_exponent(v, v[node], window=(0.01, 0.08))
        out.update(exponent=fit.exponent, is_cusp=fit.is_cusp)
    except GeometryError:
        pass
    return out


def dumbbell_family(c: float, n: int = 512) -> BubbleSystem:
    """``|x| < 1, y**2 < (c + x**2)(1 - x**2)``."""
    from .shapes import profile_domain

    return BubbleSystem((profile_domain(lambda x: (c + x * x) * (1 - x * x), 1.0, n),))


def dumbbell_profile(c: float):
    return (lambda x: (c + x * x) * (1 - x * x)), 1.0


# ------------------------------------------------- path independence

def _system_distance(a: BubbleSystem, b: BubbleSystem) -> float:
    if sorted(a.labels) != sorted(b.labels):
        return np.inf
    return max(hausdorff_distance(a.bubble(k), b.bubble(k)) for k in a.labels)


def path_independence_check(system: BubbleSystem, dQ1: float, dQ2: float,
                            numerics: Numerics | None = None, orders: Sequence[Sequence] | None = None
                            ) -> float:
    """Largest Hausdorff gap between systems reached by different extraction orders."""
    numerics = numerics or Numerics()
    if orders is None:
        orders = [[(dQ1, 0.0), (0.0, dQ2)], [(0.0, dQ2), (dQ1, 0.0)]]
    finals = []
    for steps in orders:
        strat = Strategy.from_volumes(steps)
        traj = run_regulated(system, strat, numerics=numerics)
        if traj.termination == "cusp":
            raise AnalysisError(f"cusp while extracting in order {steps}")
        finals.append(traj.snapshots[-1])
    return max(_system_distance(finals[i], finals[j])
               for i in range(len(finals)) for j in range(i + 1, len(finals)))
