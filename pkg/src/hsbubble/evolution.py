"""Suction-driven contraction of bubbles in a Hele-Shaw cell.

The fluid velocity is the gradient of a harmonic field ``Phi`` outside the
bubbles. Each boundary moves with normal velocity ``dPhi/dn`` (outward
normal; negative values shrink the bubble).

Field solver
------------
``W = Phi + i Psi`` is represented as a Cauchy integral with a real density
on every boundary, plus one logarithmic sink inside each bubble and a
constant::

    W(z) = (1/2 pi i) sum_p contour mu_p(w) dw / (w - z) + sum_k c_k log(z - z_k) + C

The density is determined up to a constant per curve (the exterior
double-layer null space), which is fixed by a zero-mean gauge row. Boundary
nodes are treated as samples of a smooth periodic curve, so the integrals
use the trapezoidal rule with singularity subtraction and derivatives are
taken with the FFT. The normal velocity is ``d Psi / ds``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import lapack, lu_solve
from shapely.ops import polylabel
from shapely.geometry import Polygon
from shapely.geometry.polygon import orient

from .geometry import (BoundaryCurve, BubbleSystem, GeometryError, cusp_exponent, find_pinches,
                       points_in_polygon, resample)

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


class EvolutionError(RuntimeError):
    pass


class FieldSolveError(EvolutionError):
    def __init__(self, msg: str, condition: float = np.inf) -> None:
        super().__init__(msg)
        self.condition = condition


class StepRejected(EvolutionError):
    pass


# ------------------------------------------------------------------ specs

@dataclass(frozen=True)
class FluxSpec:
    """``free``: one total rate shared through a common boundary value 0.
    ``regulated``: one prescribed rate per bubble (two bubbles)."""

    mode: str
    rates: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.mode not in ("free", "regulated"):
            raise ValueError(f"unknown flux mode {self.mode!r}")
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        if any(not np.isfinite(r) or r < 0 for r in rates):
            raise ValueError("extraction rates must be finite and nonnegative")
        if self.mode == "free" and len(rates) != 1:
            raise ValueError("free mode takes a single total rate")
        if self.mode == "regulated" and len(rates) != 2:
            raise ValueError("regulated mode takes exactly two rates")

    @classmethod
    def free(cls, q: float) -> "FluxSpec":
        return cls("free", (q,))

    @classmethod
    def regulated(cls, q1: float, q2: float) -> "FluxSpec":
        return cls("regulated", (q1, q2))

    @property
    def total(self) -> float:
        return float(sum(self.rates))


@dataclass(frozen=True)
class Strategy:
    """Piecewise-constant extraction schedule ``(q1(t), q2(t))``."""

    breakpoints: tuple[float, ...]
    rates: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        bp = tuple(float(b) for b in self.breakpoints)
        rates = tuple((float(a), float(b)) for a, b in self.rates)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "rates", rates)
        if len(bp) != len(rates) + 1 or len(rates) == 0:
            raise ValueError("need one more breakpoint than rate intervals")
        if bp[0] != 0.0 or np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must start at 0 and increase")
        if any(min(r) < 0 or not np.isfinite(r).all() for r in rates):
            raise ValueError("strategy rates must be finite and nonnegative")

    @classmethod
    def constant(cls, q1: float, q2: float, duration: float) -> "Strategy":
        return cls((0.0, duration), ((q1, q2),))

    @classmethod
    def from_volumes(cls, steps: Sequence[tuple[float, float]], rate: float = 1.0) -> "Strategy":
        """Consecutive extractions ``(dQ1, dQ2)``, each at total rate ``rate``."""
        bp, rates = [0.0], []
        for d1, d2 in steps:
            tot = d1 + d2
            if tot <= 0:
                continue
            dur = tot / rate
            bp.append(bp[-1] + dur)
            rates.append((d1 / dur, d2 / dur))
        return cls(tuple(bp), tuple(rates))

    @property
    def end(self) -> float:
        return self.breakpoints[-1]

    def volumes(self) -> np.ndarray:
        dt = np.diff(self.breakpoints)
        return (np.array(self.rates) * dt[:, None]).sum(axis=0)

    def rates_at(self, t: float) -> tuple[float, float]:
        k = int(np.searchsorted(self.breakpoints, t, side="right")) - 1
        k = min(max(k, 0), len(self.rates) - 1)
        return self.rates[k]

    def next_break(self, t: float) -> float:
        k = int(np.searchsorted(self.breakpoints, t, side="right"))
        return self.breakpoints[min(k, len(self.breakpoints) - 1)]

    def concatenate(self, other: "Strategy") -> "Strategy":
        shift = self.end
        return Strategy(self.breakpoints + tuple(b + shift for b in other.breakpoints[1:]),
                        self.rates + other.rates)


@dataclass(frozen=True)
class Event:
    time: float
    kind: str  # breakup | disappearance | cusp
    location: tuple[float, float]
    labels: tuple[int, ...]
    detail: dict = field(default_factory=dict)

    def to_record(self) -> dict:
        rec = {"t": float(self.time), "kind": self.kind, "x": float(self.location[0]),
               "y": float(self.location[1]), "labels": [int(k) for k in self.labels]}
        rec.update({k: v for k, v in self.detail.items()})
        return rec


@dataclass(frozen=True)
class Numerics:
    """Resolution and threshold settings; lengths relative to sqrt(S)."""

    h_factor: float = 0.01
    h: float | None = None
    min_nodes: int = 128
    dt_factor: float = 0.2
    vanish_factor: float = 3.0
    clearance_factor: float = 2.0
    cusp_kappa: float = 50.0
    cond_growth: float = 1e3
    max_condition: float = 1e12
    max_events: int = 64
    max_steps: int = 200_000
    filter_order: int = 36
    min_dt_fraction: float = 1e-12

    def __post_init__(self) -> None:
        checks = {"h_factor": (1e-4, 0.1), "dt_factor": (1e-3, 0.5), "vanish_factor": (0.5, 20.0),
                  "clearance_factor": (1.0, 10.0), "cusp_kappa": (2.0, 1e4),
                  "cond_growth": (2.0, 1e12)}
        for name, (lo, hi) in checks.items():
            v = getattr(self, name)
            if not (lo <= v <= hi):
                raise ValueError(f"numerics.{name}={v} outside safe range [{lo}, {hi}]")
        if self.h is not None and not self.h > 0:
            raise ValueError("numerics.h must be positive")
        if not 16 <= self.min_nodes <= 4096:
            raise ValueError("numerics.min_nodes outside safe range [16, 4096]")
        if not 1 <= self.max_events <= 64:
            raise ValueError("numerics.max_events outside safe range [1, 64]")

    def spacing(self, total_area: float) -> float:
        return self.h if self.h is not None else self.h_factor * np.sqrt(total_area)


# ------------------------------------------------------- spectral helpers

def _wavenumbers(n: int) -> np.ndarray:
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0  # drop the unpaired Nyquist mode from derivatives
    return k


def _deriv(f: np.ndarray, order: int = 1) -> np.ndarray:
    k = _wavenumbers(len(f))
    out = np.fft.ifft((1j * k) ** order * np.fft.fft(f))
    return out if np.iscomplexobj(f) else out.real


def _smooth(z: np.ndarray, order: int) -> np.ndarray:
    n = len(z)
    k = np.abs(np.fft.fftfreq(n, 1.0 / n)) / (n / 2)
    return np.fft.ifft(np.fft.fft(z) * np.exp(-36.0 * k ** order))


def _resample_smooth(z: np.ndarray, n_new: int, upsample: int = 16) -> np.ndarray:
    """Equal-arc-length nodes on the trigonometric interpolant of ``z``."""
    n = len(z)
    m = n * upsample
    zh = np.fft.fft(z)
    fine_h = np.zeros(m, complex)
    half = n // 2
    fine_h[:half] = zh[:half]
    fine_h[m - (n - half) + (1 if n % 2 == 0 else 0):] = zh[half + (1 if n % 2 == 0 else 0):]
    fine = np.fft.ifft(fine_h) * upsample
    alpha = TWO_PI * np.arange(m + 1) / m
    fz = np.append(fine, fine[0])
    spline_x = CubicSpline(alpha, fz.real, bc_type="periodic")
    spline_y = CubicSpline(alpha, fz.imag, bc_type="periodic")
    speed = np.abs(np.append(_deriv(fine), 0))
    speed[-1] = speed[0]
    s = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * (TWO_PI / m))])
    targets = np.arange(n_new) * (s[-1] / n_new)
    a = np.interp(targets, s, alpha)
    return spline_x(a) + 1j * spline_y(a)


def _node_count(z: np.ndarray, h: float, min_nodes: int) -> int:
    length = float(np.abs(np.roll(z, -1) - z).sum())
    return max(min_nodes, int(round(length / h)))


def _area(z: np.ndarray) -> float:
    return 0.5 * float(np.imag(np.sum(np.conj(z) * np.roll(z, -1))))


def _interior_point(z: np.ndarray) -> complex:
    poly = Polygon(np.column_stack([z.real, z.imag]))
    p = polylabel(poly, tolerance=1e-3 * np.sqrt(abs(_area(z))))
    return complex(p.x, p.y)


def _curvature(z: np.ndarray) -> np.ndarray:
    za, zaa = _deriv(z), _deriv(z, 2)
    return np.imag(np.conj(za) * zaa) / np.abs(za) ** 3


# ---------------------------------------------------------- field solver

@dataclass(frozen=True)
class FieldSolution:
    """Boundary data of the exterior field for one configuration."""

    curves: tuple[np.ndarray, ...]
    velocity: tuple[np.ndarray, ...]  # outward normal velocity per node
    constants: np.ndarray  # boundary value of Phi on each bubble
    fluxes: np.ndarray  # extraction rate of each bubble (area loss per time)
    condition: float
    density: tuple[np.ndarray, ...]
    weights: tuple[np.ndarray, ...]
    centers: np.ndarray
    log_coeffs: np.ndarray
    additive: float

    @property
    def normals(self) -> tuple[np.ndarray, ...]:
        out = []
        for z in self.curves:
            za = _deriv(z)
            out.append(-1j * za / np.abs(za))
        return tuple(out)

    def boundary_flux(self) -> np.ndarray:
        """``-contour dPhi/dn ds`` per bubble by trapezoidal quadrature."""
        out = []
        for z, v in zip(self.curves, self.velocity):
            out.append(-float(np.sum(v * np.abs(_deriv(z))) * TWO_PI / len(z)))
        return np.array(out)

    def phi(self, points) -> np.ndarray:
        """Field values; inside a bubble the boundary constant is returned."""
        p = np.atleast_1d(np.asarray(points))
        if not np.iscomplexobj(p):
            p = np.atleast_2d(p.astype(float))
            p = p[:, 0] + 1j * p[:, 1]
        out = np.full(len(p), self.additive, dtype=float)
        out += (self.log_coeffs[None, :] * np.log(np.abs(p[:, None] - self.centers[None, :]))).sum(axis=1)
        inside = np.zeros(len(p), dtype=int) - 1
        for k, (z, mu, w) in enumerate(zip(self.curves, self.density, self.weights)):
            ins = points_in_polygon(np.column_stack([p.real, p.imag]), np.column_stack([z.real, z.imag]))
            inside[ins] = k
            diff = z[None, :] - p[:, None]
            near = np.argmin(np.abs(diff), axis=1)
            dmu = mu[None, :] - mu[near][:, None]
            out += (dmu * (w[None, :] / diff).imag).sum(axis=1) / TWO_PI
        for k in range(len(self.curves)):
            out[inside == k] = self.constants[k]
        return out


def _solve(curves: Sequence[np.ndarray], flux: FluxSpec, max_condition: float = 1e12) -> FieldSolution:
    m = len(curves)
    if flux.mode == "regulated" and m != 2:
        raise ValueError("regulated mode needs exactly two bubbles")
    ns = np.array([len(c) for c in curves])
    z = np.concatenate(curves)
    za_list = [_deriv(c) for c in curves]
    w_list = [za * (TWO_PI / len(c)) for za, c in zip(za_list, curves)]
    za = np.concatenate(za_list)
    w = np.concatenate(w_list)
    cid = np.repeat(np.arange(m), ns)
    n = len(z)
    diff = z[None, :] - z[:, None]
    np.fill_diagonal(diff, 1.0)
    g = w[None, :] / diff
    np.fill_diagonal(g, 0.0)
    kmat = g.imag / TWO_PI
    rmat = g.real
    same = cid[:, None] == cid[None, :]
    centers = np.array([_interior_point(c) for c in curves])
    logs = np.log(np.abs(z[:, None] - centers[None, :]))

    a_mu = kmat.copy()
    a_mu[np.arange(n), np.arange(n)] = -(kmat * same).sum(axis=1)
    gauge = np.zeros((m, n))
    for k in range(m):
        gauge[k, cid == k] = 1.0 / ns[k]

    if flux.mode == "free":
        size = n + m + 1
        a = np.zeros((size, size))
        rhs = np.zeros(size)
        a[:n, :n] = a_mu
        a[:n, n:n + m] = logs
        a[:n, n + m] = 1.0
        a[n:n + m, :n] = gauge
        a[n + m, n:n + m] = 1.0
        rhs[n + m] = -flux.total / TWO_PI
    else:
        coeffs = -np.array(flux.rates) / TWO_PI
        size = n + m
        a = np.zeros((size, size))
        a[:n, :n] = a_mu
        for k in range(m):
            a[:n, n + k] = -(cid == k).astype(float)
        a[n:, :n] = gauge
        rhs = np.zeros(size)
        rhs[:n] = -logs @ coeffs

    anorm = np.abs(a).sum(axis=0).max()
    lu, piv, info = lapack.dgetrf(a)
    if info != 0:
        raise FieldSolveError("singular boundary-integral system", np.inf)
    rcond, _ = lapack.dgecon(lu, anorm, norm="1")
    cond = 1.0 / rcond if rcond > 0 else np.inf
    if cond > max_condition:
        raise FieldSolveError(f"ill-conditioned boundary-integral system (condition ~ {cond:.3g})", cond)
    sol = lu_solve((lu, piv), rhs)
    mu = sol[:n]
    if flux.mode == "free":
        coeffs = sol[n:n + m]
        additive = float(sol[n + m])
        constants = np.zeros(m)
    else:
        constants = sol[n:n + m].copy()
        additive = 0.0

    offs = np.concatenate([[0], np.cumsum(ns)])
    mus = tuple(mu[offs[k]:offs[k + 1]] for k in range(m))
    mu_a = np.concatenate([_deriv(x) for x in mus])
    dalpha = np.repeat(TWO_PI / ns, ns)
    psi = -(rmat @ mu - mu * (rmat * same).sum(axis=1) + mu_a * dalpha) / TWO_PI
    log_part = (coeffs[None, :] * (za[:, None] / (z[:, None] - centers[None, :])).imag).sum(axis=1)
    vel = []
    for k in range(m):
        sl = slice(offs[k], offs[k + 1])
        vel.append((_deriv(psi[sl]) + log_part[sl]) / np.abs(za[sl]))
    return FieldSolution(tuple(np.asarray(c) for c in curves), tuple(vel), constants,
                         -TWO_PI * coeffs, cond, mus, tuple(w_list), centers, coeffs, additive)


def solve_field(system: BubbleSystem, flux: FluxSpec, numerics: Numerics | None = None) -> FieldSolution:
    """Normal velocities and boundary constants of the exterior field."""
    numerics = numerics or Numerics()
    if flux.mode == "regulated" and len(system) != 2:
        raise ValueError("regulated mode needs exactly two bubbles")
    if len(system) > 1:
        system.check_disjoint()
    return _solve([b.z for b in system.bubbles], flux, numerics.max_condition)


# ------------------------------------------------------------- stepping

def _advance(curves: list[np.ndarray], flux: FluxSpec, dt: float, numerics: Numerics,
             first: FieldSolution | None = None) -> tuple[list[np.ndarray], FieldSolution]:
    sol0 = first if first is not None else _solve(curves, flux, numerics.max_condition)
    half = [z + 0.5 * dt * v * nrm for z, v, nrm in zip(curves, sol0.velocity, sol0.normals)]
    for z in half:
        if _area(z) <= 0:
            raise StepRejected("midpoint state has a collapsed bubble")
    sol1 = _solve(half, flux, numerics.max_condition)
    return [z + dt * v * nrm for z, v, nrm in zip(curves, sol1.velocity, sol1.normals)], sol0


def _regrid(curves: list[np.ndarray], h: float, numerics: Numerics) -> list[np.ndarray]:
    out = []
    for z in curves:
        z = _smooth(z, numerics.filter_order)
        out.append(_resample_smooth(z, _node_count(z, h, numerics.min_nodes)))
    return out


def _spectral_area(z: np.ndarray) -> float:
    return 0.5 * float(np.imag(np.sum(np.conj(z) * _deriv(z)))) * TWO_PI / len(z)


def _offset_to_area(z: np.ndarray, target: float) -> np.ndarray:
    for _ in range(2):
        za = _deriv(z)
        length = float(np.sum(np.abs(za))) * TWO_PI / len(z)
        z = z + (target - _area(z)) / length * (-1j * za / np.abs(za))
    return z


def _track_area(old: list[np.ndarray], advanced: list[np.ndarray], new: list[np.ndarray]) -> list[np.ndarray]:
    """Make polygon-area changes follow the smooth-curve area changes.

    The polygon through the nodes misses a fraction ~ (2 pi / N)**2 / 6 of
    the area of the curve it samples; without this correction that bias
    drifts whenever the node count is pinned at its floor.
    """
    return [_offset_to_area(zn, _area(zo) + _spectral_area(za) - _spectral_area(zo))
            for zo, za, zn in zip(old, advanced, new)]


def _to_system(curves, labels, t) -> BubbleSystem:
    return BubbleSystem(tuple(BoundaryCurve.from_complex(z) for z in curves), float(t), tuple(labels))


def step(system: BubbleSystem, flux: FluxSpec, dt: float, numerics: Numerics | None = None,
         h: float | None = None) -> BubbleSystem:
    """One explicit-midpoint step followed by resampling."""
    numerics = numerics or Numerics()
    if not dt > 0:
        raise ValueError("dt must be positive")
    h = h if h is not None else numerics.spacing(system.total_area)
    curves = [b.z for b in system.bubbles]
    new, _ = _advance(curves, flux, dt, numerics)
    _check_geometry(new, h, numerics, flux.mode)
    new = _track_area(curves, new, _regrid(new, h, numerics))
    return _to_system(new, system.labels, system.time + dt)


def _check_geometry(curves, h, numerics: Numerics, mode: str) -> None:
    for z in curves:
        if _area(z) <= 0:
            raise StepRejected("a boundary turned inside out")
        if not BoundaryCurve.from_complex(z, degenerate=True).is_simple():
            raise StepRejected("boundary self-intersection")


def _cusp_metric(z: np.ndarray) -> tuple[float, int]:
    kappa = np.abs(_curvature(z))
    k = int(np.argmax(kappa))
    return float(kappa[k] * np.sqrt(abs(_area(z)) / np.pi)), k


# ------------------------------------------------------------ trajectory

@dataclass
class Trajectory:
    snapshots: list[BubbleSystem]
    events: list[Event]
    probe_points: np.ndarray
    probe_log: list[np.ndarray]
    constants: list[dict]
    fluxes: list[dict]
    cusp_metric: list[float]
    condition: list[float]
    total_time: float
    t_star: float
    h: float
    mode: str
    termination: str = "completed"
    termination_detail: dict = field(default_factory=dict)
    initial_area: float = 0.0
    remnants: list[float] = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    def areas(self, label: int) -> np.ndarray:
        """Area history of one bubble (nan where it no longer exists)."""
        out = []
        for s in self.snapshots:
            out.append(s.bubble(label).area if label in s.labels else np.nan)
        return np.array(out)

    def flux_history(self, label: int) -> np.ndarray:
        return np.array([f.get(label, np.nan) for f in self.fluxes])

    def total_areas(self) -> np.ndarray:
        return np.array([s.total_area for s in self.snapshots])

    def accounted_areas(self) -> np.ndarray:
        """Live area plus remnants not yet charged to the clock.

        Free runs charge every removed remnant to the clock at once, so this is
        the live area; ``remnants`` keeps the cumulative deleted area.
        """
        return self.total_areas()

    def events_of(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]


def _probe_values(sol: FieldSolution, probes: np.ndarray) -> np.ndarray:
    if len(probes) == 0:
        return np.zeros(0)
    return sol.phi(probes[:, 0] + 1j * probes[:, 1])


def _evolve(initial: BubbleSystem, rates: Callable[[float], FluxSpec], t_end: float, mode: str,
            probes, numerics: Numerics, breaks: Callable[[float], float] | None = None,
            on_step: Callable | None = None) -> Trajectory:
    s0 = initial.total_area
    h = numerics.spacing(s0)
    vanish_area = (numerics.vanish_factor * h) ** 2
    clearance = numerics.clearance_factor * h
    probes = np.zeros((0, 2)) if probes is None else np.atleast_2d(np.asarray(probes, dtype=float))
    if len(initial) > 1:
        initial.check_disjoint()

    labels = list(initial.labels)
    next_label = max(labels) + 1
    curves = _regrid([b.z for b in initial.bubbles], h, numerics)
    t = float(initial.time)
    events: list[Event] = []
    traj = Trajectory([], events, probes, [], [], [], [], [], t, t_end, h, mode, initial_area=s0)

    def record(sol: FieldSolution, cs: list[np.ndarray]) -> None:
        traj.snapshots.append(_to_system(cs, labels, t))
        traj.probe_log.append(_probe_values(sol, probes))
        traj.constants.append(dict(zip(labels, map(float, sol.constants))))
        traj.fluxes.append(dict(zip(labels, map(float, sol.fluxes))))
        traj.cusp_metric.append(max(_cusp_metric(z)[0] for z in cs))
        traj.condition.append(sol.condition)
        traj.remnants.append(removed)

    def finish(reason: str, **detail) -> Trajectory:
        traj.termination = reason
        traj.termination_detail = detail
        traj.total_time = t
        return traj

    removed = 0.0
    flux = rates(t)
    sol = _solve(curves, flux, numerics.max_condition)
    record(sol, curves)
    cond0 = sol.condition
    in_cusp = False
    last_surgery = -10**9
    for _ in range(numerics.max_steps):
        removed_before = removed
        if t >= t_end - 1e-14 * max(1.0, abs(t_end)):
            return finish("completed" if mode == "free" else "strategy_exhausted")
        flux = rates(t)
        areas = np.array([_area(z) for z in curves])
        vmax = max(np.abs(v).max() for v in sol.velocity)
        hloc = min(np.abs(np.roll(z, -1) - z).mean() for z in curves)
        dt = numerics.dt_factor * hloc / max(vmax, 1e-300)
        shrink = sol.fluxes > 0
        if shrink.any():
            dt = min(dt, 0.25 * float(np.min(areas[shrink] / sol.fluxes[shrink])))
        dt = min(dt, t_end - t)
        if breaks is not None:
            nb = breaks(t)
            if nb > t:
                dt = min(dt, nb - t)
        if dt < numerics.min_dt_fraction * max(t_end, 1.0):
            z_idx = int(np.argmax([_cusp_metric(z)[0] for z in curves]))
            metric, node = _cusp_metric(curves[z_idx])
            loc = curves[z_idx][node]
            if mode == "regulated":
                events.append(Event(t, "cusp", (loc.real, loc.imag), (labels[z_idx],),
                                    {"metric": metric, "trigger": "step-size collapse"}))
                return finish("cusp", time=t, x=loc.real, y=loc.imag, label=labels[z_idx])
            raise EvolutionError(f"step-size underflow at t={t:.6g}")
        new, _ = _advance(curves, flux, dt, numerics, first=sol)
        t += dt
        try:
            _check_geometry(new, h, numerics, mode)
        except StepRejected:
            if mode == "regulated":
                z_idx = int(np.argmax([_cusp_metric(z)[0] for z in curves]))
                metric, node = _cusp_metric(curves[z_idx])
                loc = curves[z_idx][node]
                events.append(Event(t, "cusp", (loc.real, loc.imag), (labels[z_idx],),
                                    {"metric": metric, "trigger": "boundary fold"}))
                return finish("cusp", time=t, x=loc.real, y=loc.imag, label=labels[z_idx])
            raise
        curves = _track_area(curves, new, _regrid(new, h, numerics))

        # disappearance: area below resolution
        areas = np.array([_area(z) for z in curves])
        gone = [k for k in range(len(curves)) if areas[k] < vanish_area]
        if gone:
            rates_now = sol.fluxes
            for k in sorted(gone, reverse=True):
                q_k = rates_now[k] if k < len(rates_now) else 0.0
                t_v = t + (areas[k] / q_k if q_k > 0 else 0.0)
                c = BoundaryCurve.from_complex(curves[k]).centroid
                events.append(Event(t_v, "disappearance", (float(c[0]), float(c[1])), (labels[k],),
                                    {"area": float(areas[k])}))
                removed += float(areas[k])
                del curves[k]
                del labels[k]
            if mode == "regulated":
                if not curves:
                    return finish("completed", time=max(e.time for e in events[-2:]))
                # the other bubble is still above resolution
                return finish("bubble_vanished", label=events[-1].labels[0], time=events[-1].time)
            if not curves:
                t = max(e.time for e in events if e.kind == "disappearance")
                return finish("completed")

        # breakup: a neck narrower than the clearance
        k = 0
        while k < len(curves):
            z = curves[k]
            pinches = find_pinches(np.column_stack([z.real, z.imag]), clearance)
            if not pinches:
                k += 1
                continue
            if mode == "regulated":
                raise EvolutionError("pinch during regulated contraction (no breakup allowed)")
            pieces, crumbs = _open_surgery(z, clearance, vanish_area)
            if len(pieces) + len(crumbs) < 2:
                # a thin spike or a sliver below resolution, not a neck: trim it
                if pieces:
                    curves[k] = _restore_area(pieces, _area(z), h, numerics)[0]
                    k += 1
                else:
                    cen = BoundaryCurve.from_complex(z, degenerate=True).centroid
                    q_k = traj.fluxes[-1].get(labels[k], 0.0)
                    t_v = t + (_area(z) / q_k if q_k > 0 else 0.0)
                    events.append(Event(t_v, "disappearance", (float(cen[0]), float(cen[1])), (labels[k],),
                                        {"area": float(_area(z)), "surgery": True}))
                    removed += float(_area(z))
                    del curves[k]
                    del labels[k]
                continue
            target = _area(z) - sum(_area(c) for c in crumbs)
            removed += sum(_area(c) for c in crumbs)
            pieces = _restore_area(pieces, target, h, numerics)
            new_labels = list(range(next_label, next_label + len(pieces) + len(crumbs)))
            next_label += len(new_labels)
            for i, j, _ in pinches:
                loc = 0.5 * (z[i] + z[j])
                events.append(Event(t, "breakup", (loc.real, loc.imag), (labels[k], *new_labels),
                                    {"pieces": len(pieces), "crumbs": len(crumbs)}))
            for c, lab in zip(crumbs, new_labels[len(pieces):]):
                cen = BoundaryCurve.from_complex(c, degenerate=True).centroid
                events.append(Event(t, "disappearance", (float(cen[0]), float(cen[1])), (lab,),
                                    {"area": float(_area(c)), "surgery": True}))
            curves[k:k + 1] = pieces
            labels[k:k + 1] = new_labels[:len(pieces)]
            k += len(pieces)
            last_surgery = len(traj.snapshots)
        if not curves:
            t = max(t, max(e.time for e in events if e.kind == "disappearance"))
            return finish("completed")
        if len(events) > numerics.max_events:
            raise EvolutionError(f"more than {numerics.max_events} events")
        if removed > removed_before:
            # free flow is linear in q, so the survivors' shapes depend only on the
            # volume they have lost; the deleted remnant would still have drawn its
            # area from the total rate, so the survivors run late by area/q
            t += (removed - removed_before) / flux.total

        sol = _solve(curves, rates(t), numerics.max_condition)
        record(sol, curves)
        if on_step is not None:
            on_step(traj)
        metric_k = [_cusp_metric(z) for z in curves]
        z_idx = int(np.argmax([m[0] for m in metric_k]))
        metric, node = metric_k[z_idx]
        loc = curves[z_idx][node]
        cusp_now = metric > numerics.cusp_kappa or (mode == "regulated" and
                                                    sol.condition > numerics.cond_growth * cond0)
        if cusp_now and not in_cusp:
            detail = {"metric": metric, "condition": sol.condition,
                      "post_surgery": len(traj.snapshots) - last_surgery <= 10}
            try:
                fit = cusp_exponent(np.column_stack([curves[z_idx].real, curves[z_idx].imag]),
                                    (loc.real, loc.imag), window=(0.01, 0.08))
                detail.update(exponent=fit.exponent, is_cusp=fit.is_cusp)
            except GeometryError:
                pass
            events.append(Event(t, "cusp", (loc.real, loc.imag), (labels[z_idx],), detail))
            cusp_event, cusp_step = events[-1], len(traj.snapshots)
            if mode == "regulated":
                return finish("cusp", time=t, x=loc.real, y=loc.imag, label=labels[z_idx])
        if in_cusp and not cusp_now:
            cusp_event.detail["relaxed_at"] = t
            cusp_event.detail["relaxed_after_steps"] = len(traj.snapshots) - cusp_step
        in_cusp = cusp_now
    raise EvolutionError("step limit reached")


def _open_surgery(z: np.ndarray, clearance: float, vanish_area: float):
    """Split at every neck thinner than ``clearance`` by a morphological opening.

    Returns ``(pieces, crumbs)``: curves above and below the vanish area.
    """
    poly = Polygon(np.column_stack([z.real, z.imag])).buffer(0)
    opened = poly.buffer(-clearance, quad_segs=16).buffer(clearance, quad_segs=16)
    geoms = [g for g in getattr(opened, "geoms", [opened]) if not g.is_empty and g.area > 0]
    pieces, crumbs = [], []
    for g in sorted(geoms, key=lambda g: (g.centroid.x, g.centroid.y)):
        if g.is_empty:
            continue
        xy = np.asarray(orient(g, 1.0).exterior.coords)[:-1]
        c = xy[:, 0] + 1j * xy[:, 1]
        (pieces if g.area >= vanish_area and len(c) >= 8 else crumbs).append(c)
    return pieces, crumbs


def _restore_area(pieces: list[np.ndarray], target: float, h: float, numerics: Numerics) -> list[np.ndarray]:
    """Resample surgery pieces and offset them normally to keep the total area."""
    out = []
    for p in pieces:
        cur = resample(np.column_stack([p.real, p.imag]), min(h, 0.99 * np.abs(np.roll(p, -1) - p).sum() / 8))
        z = cur.z
        out.append(_resample_smooth(_smooth(z, 8), _node_count(z, h, numerics.min_nodes)))
    for _ in range(3):
        total = sum(_area(z) for z in out)
        length = sum(np.abs(np.roll(z, -1) - z).sum() for z in out)
        delta = (target - total) / length
        out = [z + delta * (-1j * _deriv(z) / np.abs(_deriv(z))) for z in out]
    return out


def run_free(initial: BubbleSystem, q: float, t_end: float | None = None, probes=None,
             numerics: Numerics | None = None, on_step: Callable | None = None) -> Trajectory:
    """Free contraction at total rate ``q`` until ``t_end`` (default ``S/q``)."""
    if not q > 0:
        raise ValueError("q must be positive")
    numerics = numerics or Numerics()
    t_star = initial.time + initial.total_area / q
    if t_end is None:
        t_end = t_star * (1 + 1e-9)
    if t_end > t_star * (1 + 1e-9):
        raise ValueError(f"t_end={t_end} beyond complete extraction at {t_star}")
    spec = FluxSpec.free(q)
    traj = _evolve(initial, lambda t: spec, t_end, "free", probes, numerics, on_step=on_step)
    traj.t_star = t_star
    return traj


def run_regulated(initial: BubbleSystem, strategy: Strategy, probes=None,
                  numerics: Numerics | None = None, on_step: Callable | None = None) -> Trajectory:
    """Regulated contraction of two bubbles under a piecewise-constant schedule."""
    if len(initial) != 2:
        raise ValueError("regulated contraction needs exactly two bubbles")
    numerics = numerics or Numerics()
    vols = strategy.volumes()
    areas = np.array(initial.areas)
    if np.any(vols > areas * (1 + 1e-9)):
        raise ValueError(f"strategy extracts {vols.tolist()} but areas are {areas.tolist()}")

    def rates(t: float) -> FluxSpec:
        return FluxSpec.regulated(*strategy.rates_at(t))

    traj = _evolve(initial, rates, initial.time + strategy.end, "regulated", probes, numerics,
                   breaks=lambda t: initial.time + strategy.next_break(t - initial.time), on_step=on_step)
    traj.t_star = initial.time + initial.total_area / max(sum(strategy.rates[0]), 1e-300)
    return traj
