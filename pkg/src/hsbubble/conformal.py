"""Exact solutions given by finite conformal maps of the unit disk onto the fluid.

A map ``f(zeta) = A/zeta + sum_k a_k zeta**k`` sends the unit disk onto the
fluid region (the pole at 0 goes to infinity); the bubble is bounded by the
image of the unit circle.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

import numpy as np
from shapely.geometry import LinearRing

from .geometry import BoundaryCurve


class MapError(ValueError):
    pass


class UnivalenceError(MapError):
    pass


# ------------------------------------------------------------------- maps

@dataclass(frozen=True)
class LaurentMap:
    A: float
    coeffs: tuple[complex, ...] = ()  # a_0, a_1, ..., a_m
    degenerate: bool = False

    def __post_init__(self) -> None:
        coeffs = tuple(complex(c) for c in self.coeffs)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "A", float(self.A))
        if not np.isfinite(self.A) or not all(np.isfinite(c) for c in coeffs):
            raise MapError("map coefficients must be finite")
        if self.A <= 0:
            raise MapError("A must be positive")

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        out = self.A / zeta
        for k, c in enumerate(self.coeffs):
            if c != 0:
                out = out + c * zeta ** k
        return out

    def derivative(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        out = -self.A / zeta ** 2
        for k, c in enumerate(self.coeffs[1:], start=1):
            if c != 0:
                out = out + k * c * zeta ** (k - 1)
        return out

    def derivative_numerator(self) -> np.ndarray:
        """Coefficients (highest power first) of ``zeta**2 f'(zeta)``."""
        m = len(self.coeffs)
        poly = np.zeros(max(m + 1, 1), dtype=complex)  # index = power
        poly[0] = -self.A
        for k in range(1, m):
            poly[k + 1] += k * self.coeffs[k]
        return np.trim_zeros(poly[::-1], "f")

    @property
    def formula_area(self) -> float:
        return float(np.pi * (self.A ** 2 - sum(k * abs(c) ** 2 for k, c in enumerate(self.coeffs))))

    def to_record(self) -> dict:
        return {"A": self.A, "coeffs": [[c.real, c.imag] for c in self.coeffs]}


@dataclass(frozen=True)
class KufarevMap:
    """``f(zeta) = (beta/alpha) / (1 - alpha zeta) + gamma / zeta``."""

    a: float
    R: float
    r: float
    q: float
    t: float
    alpha: float
    beta: float
    gamma: float
    roots: tuple[float, float, float] = field(default=(np.nan, np.nan, np.nan))

    @property
    def A(self) -> float:
        return self.gamma

    def __call__(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return (self.beta / self.alpha) / (1 - self.alpha * zeta) + self.gamma / zeta

    def derivative(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return self.beta / (1 - self.alpha * zeta) ** 2 - self.gamma / zeta ** 2

    def derivative_numerator(self) -> np.ndarray:
        # zeta**2 f' * (1 - alpha zeta)**2 = beta zeta**2 - gamma (1 - alpha zeta)**2
        al, b, g = self.alpha, self.beta, self.gamma
        return np.array([b - g * al * al, 2 * g * al, -g], dtype=complex)

    @property
    def formula_area(self) -> float:
        # Laurent coefficients a_k = beta alpha**(k-1) for k >= 0
        return float(np.pi * (self.gamma ** 2 - self.beta ** 2 / (1 - self.alpha ** 2) ** 2))

    def to_record(self) -> dict:
        return {k: float(getattr(self, k)) for k in ("a", "R", "r", "q", "t", "alpha", "beta", "gamma")}


AnyMap = "LaurentMap | KufarevMap"


def _check_finite(m) -> None:
    vals = [m.A] + list(getattr(m, "coeffs", ())) + [getattr(m, "beta", 0.0), getattr(m, "alpha", 0.0)]
    if not all(np.isfinite(complex(v)) for v in vals):
        raise MapError("non-finite map coefficients")


def trace_boundary(fmap, n: int = 1024) -> BoundaryCurve:
    """Image of the unit circle, counterclockwise around the bubble.

    Non-simple or collapsed traces come back flagged ``degenerate``.
    """
    if n < 64:
        raise MapError("trace needs at least 64 samples")
    _check_finite(fmap)
    theta = 2 * np.pi * np.arange(n) / n
    w = fmap(np.exp(-1j * theta))  # reversed sweep: the bubble lies to the left
    curve = BoundaryCurve.from_complex(w, degenerate=True)
    steps = np.abs(np.roll(w, -1) - w)
    scale = np.abs(w).max()
    ok = (curve.area > 1e-12 * scale ** 2 and np.all(steps > 1e-14 * scale)
          and LinearRing(curve.vertices).is_simple)
    return BoundaryCurve.from_complex(w) if ok else curve


@dataclass(frozen=True)
class Univalence:
    ok: bool
    failure: complex | None  # zeta where the check fails
    interior_zeros: int
    boundary_zeros: tuple[complex, ...]
    simple: bool
    winding_outer: int | None
    winding_inner: int

    def __bool__(self) -> bool:
        return self.ok


def _winding(values: np.ndarray) -> int:
    ang = np.unwrap(np.angle(np.append(values, values[0])))
    return int(round((ang[-1] - ang[0]) / (2 * np.pi)))


def univalence_check(fmap, n: int = 4096, allow_cusps: bool = False, tol: float = 1e-9) -> Univalence:
    """Univalence on the punctured disk.

    Zeros of ``f'`` are counted with the argument principle applied to
    ``zeta**2 f'`` on ``|zeta| = 1`` and on ``|zeta| = 0.2``; the zeros are
    also located as polynomial roots so a failure can be reported. Zeros on
    the unit circle are boundary cusps: a failure unless ``allow_cusps``.
    The traced boundary must also be simple.
    """
    _check_finite(fmap)
    num = fmap.derivative_numerator()
    # negligible leading terms only carry roots far outside the disk
    keep = np.flatnonzero(np.abs(num) > 1e-14 * np.abs(num).max())
    num = num[keep[0]:] if len(keep) else num
    roots = np.roots(num) if len(num) > 1 else np.array([], complex)
    mod = np.abs(roots)
    inside = roots[mod < 1 - tol]
    on = tuple(roots[np.abs(mod - 1) <= tol])
    theta = 2 * np.pi * np.arange(n) / n
    ring = np.exp(1j * theta)

    def g(z):
        return z * z * fmap.derivative(z)

    w_in = _winding(g(0.2 * ring))
    w_out = None if on else _winding(g(ring))
    trace = trace_boundary(fmap, max(n, 64))
    simple = not trace.degenerate
    failure = None
    if len(inside):
        failure = complex(inside[np.argmin(np.abs(inside))])
    elif on and not allow_cusps:
        failure = complex(on[0])
    elif w_out not in (None, 0) or w_in != 0:
        failure = complex(0.0)
    ok = simple and failure is None
    if not simple and failure is None:
        # locate the first sample where the trace crosses itself
        failure = complex(np.exp(-1j * theta[int(np.argmin(np.abs(np.diff(trace.z))))]))
    return Univalence(ok, failure, int(len(inside)), on, simple, w_out, w_in)


def map_area(fmap) -> float:
    """Bubble area from the coefficient formula (univalent maps only)."""
    if getattr(fmap, "degenerate", False):
        raise UnivalenceError("degenerate map has no bubble")
    chk = univalence_check(fmap, allow_cusps=True)
    if not chk.ok:
        raise UnivalenceError(f"map is not univalent (failure near zeta={chk.failure})")
    return fmap.formula_area


# --------------------------------------------------------------- families

def exact_family(kind: str, A: float, beta: float) -> LaurentMap:
    """``quartic``: ``A/z + A/(1+6 beta A^2) z - 2 beta A^3 z^3``.
    ``saddle``: ``A/z + A + (A - 4 beta A^2) z - 2 beta A^2 z^2`` (``f'(-1) = 0``)."""
    if kind == "quartic":
        m = LaurentMap(A, (0.0, A / (1 + 6 * beta * A * A), 0.0, -2 * beta * A ** 3))
        if beta == 0:
            return LaurentMap(m.A, m.coeffs, degenerate=True)
        chk = univalence_check(m)
    elif kind == "saddle":
        m = LaurentMap(A, (A, A - 4 * beta * A * A, -2 * beta * A * A))
        chk = univalence_check(m, allow_cusps=True)
    else:
        raise MapError(f"unknown family {kind!r}")
    if not chk.ok:
        raise UnivalenceError(f"{kind} family is not univalent at A={A}, beta={beta}")
    return m


# ------------------------------------------------------------------- Q_n

@dataclass(frozen=True)
class QPolynomial:
    n: int
    coefficients: tuple[Fraction, ...]  # highest power first

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        for c in self.coefficients:
            out = out * u + float(c)
        return out


def qn(n: int) -> QPolynomial:
    """``Q_n(u) = sum_k (2k)! / (4^k k!^2) u^(n-k)`` with exact coefficients."""
    if not 0 <= n <= 12:
        raise ValueError("n must lie in [0, 12]")
    return QPolynomial(n, tuple(Fraction(factorial(2 * k), 4 ** k * factorial(k) ** 2)
                                for k in range(n + 1)))


def limit_curve(n: int, beta: float, alpha: float = 0.0, samples: int = 1024) -> BoundaryCurve:
    """``y^2 = (beta - n alpha^2)^2 (1 - x^2) Q_{n-1}(x^2)^2`` as a closed trace."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = beta - n * alpha ** 2
    if k <= 0:
        raise ValueError("beta - n*alpha**2 must be positive")
    th = 2 * np.pi * np.arange(samples) / samples
    c = np.cos(th)
    return BoundaryCurve(np.column_stack([c, k * qn(n - 1)(c * c) * np.sin(th)]))


def saddle_node_curve(beta: float, samples: int = 1024) -> BoundaryCurve:
    """``y^2 = beta^2 (x + 1/2)^3 (3/2 - x)`` on ``[-1/2, 3/2]``; cusp at ``x = -1/2``."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    th = 2 * np.pi * np.arange(samples) / samples
    return BoundaryCurve(np.column_stack([np.cos(th) + 0.5, beta * np.sin(th) * (1 + np.cos(th))]))


# ---------------------------------------------------------------- Kufarev

def _cubic_roots(c3: float, c2: float, c1: float, c0: float) -> np.ndarray:
    """Real roots of a cubic with three real roots (trigonometric method)."""
    b, c, d = c2 / c3, c1 / c3, c0 / c3
    p = c - b * b / 3
    qq = 2 * b ** 3 / 27 - b * c / 3 + d
    if p >= 0:
        raise MapError("cubic does not have three real roots")
    arg = 3 * qq / (2 * p) * np.sqrt(-3 / p)
    if abs(arg) > 1:
        raise MapError("cubic does not have three real roots")
    m = 2 * np.sqrt(-p / 3)
    th = np.arccos(arg) / 3
    roots = np.sort(m * np.cos(th - 2 * np.pi * np.arange(3) / 3) - b / 3)
    for _ in range(3):  # Newton polish
        f = ((c3 * roots + c2) * roots + c1) * roots + c0
        df = (3 * c3 * roots + 2 * c2) * roots + c1
        roots = roots - np.where(df != 0, f / np.where(df != 0, df, 1), 0)
    return np.sort(roots)


def kufarev_cubic(a: float, R: float, r: float, q: float, t: float) -> tuple[float, float, float, float]:
    s = R * R - q * t / np.pi
    k = 2 * r * r + s
    return 2 * a ** 4, -(2 * a * a * s + a ** 4), 0.0, k * k


def kufarev_solve(a: float, R: float, r: float, q: float, t: float) -> KufarevMap:
    """Map onto the fluid around the surviving bubble, with the middle cubic root as alpha^2."""
    if not (R > r > 0 and a > R + r and q > 0 and t >= 0):
        raise MapError("need a > R + r, R > r > 0, q > 0, t >= 0")
    c3, c2, c1, c0 = kufarev_cubic(a, R, r, q, t)
    if abs(c0) < 1e-12 * abs(c3):
        raise MapError("constant term vanishes: degenerate cubic")
    roots = _cubic_roots(c3, c2, c1, c0)
    if np.min(np.diff(roots)) < 1e-9:
        raise MapError("cubic roots coalesce: outside the validity window")
    x = roots[1]
    if x <= 0:
        raise MapError("middle root is not positive")
    al = float(np.sqrt(x))
    k = 2 * r * r + R * R - q * t / np.pi
    gamma = 0.5 * (a * al + k / (a * al))
    beta = 0.5 * (1 - al * al) * (a * al - k / (a * al))
    m = KufarevMap(a, R, r, q, t, al, beta, gamma, tuple(float(v) for v in roots))
    if not univalence_check(m).ok:
        raise UnivalenceError("Kufarev map is not univalent at these parameters")
    return m


# ------------------------------------------------------ Richardson check

def richardson_residual(fmap, h_poly, n: int | None = None) -> float:
    """Size of the part of ``conj(f(zeta)) - h(f(zeta))`` on ``|zeta| = 1``
    with negative Fourier index.

    It vanishes exactly when ``f*(1/zeta) - h(f(zeta))`` extends
    holomorphically into the unit disk, i.e. when ``h`` is the Cauchy
    transform of the bubble.
    """
    h = np.asarray(h_poly, dtype=complex)  # h[k] multiplies z**k
    if not np.all(np.isfinite(h)):
        raise MapError("non-finite h coefficients")
    deg_f = len(getattr(fmap, "coeffs", ())) + 1
    if n is None:
        need = 4 * (max(len(h), 1) * (deg_f + 1) + 8)
        n = max(1024, 1 << int(np.ceil(np.log2(need))))
        if isinstance(fmap, KufarevMap):
            n = max(n, 1 << int(np.ceil(np.log2(200 / max(1e-3, -np.log(fmap.alpha))))))
    zeta = np.exp(2j * np.pi * np.arange(n) / n)
    w = fmap(zeta)
    hw = np.zeros_like(w)
    for c in h[::-1]:
        hw = hw * w + c
    g = np.conj(w) - hw
    coef = np.fft.fft(g) / n
    k = np.fft.fftfreq(n, 1.0 / n)
    return float(np.sqrt(np.sum(np.abs(coef[k < 0]) ** 2)))
