from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hsbubble.geometry import BoundaryCurve, BubbleSystem
from hsbubble.potential import (GravityPotential, NearBoundaryError, OutsideDomainError, SymmetryError,
                                axis_extrema_count, breakup_integral, cauchy_from_gradient, cauchy_transform,
                                disk_potential, ellipse_potential, eval_potential, find_critical_points,
                                predict_breakup)
from hsbubble.shapes import disk, ellipse, profile_domain, system

RNG_SEED = 20240611


def star(rng, center, k=None, rmin=0.3, rmax=1.0):
    k = k or int(rng.integers(8, 24))
    th = np.sort(rng.uniform(0, 2 * np.pi, k))
    th = np.linspace(0, 2 * np.pi, k, endpoint=False) + 0.3 * (th - th.mean()) / k
    r = rng.uniform(rmin, rmax, k)
    return BoundaryCurve(np.column_stack([r * np.cos(th), r * np.sin(th)]) + center), r.min() * np.cos(np.pi / k)


def random_system(rng):
    m = int(rng.integers(1, 4))
    curves, inner = [], []
    for j in range(m):
        c = np.array([3.0 * j, rng.uniform(-0.5, 0.5)])
        cur, rin = star(rng, c)
        curves.append(cur)
        inner.append((c, rin))
    return BubbleSystem(tuple(curves)), inner


# ------------------------------------------------------------------ oracles

def test_unit_disk_center():
    p = eval_potential(system(disk(n=4096)), (0.0, 0.0))
    S = disk(n=4096).area
    # inner radius-squared correction: polygon vs disk differs by O(n^-2)
    assert p.value == pytest.approx(-0.25, abs=1e-6)
    assert np.allclose(p.gradient, 0, atol=1e-12)
    assert np.allclose(p.hessian, np.eye(2) / 2, atol=1e-9)
    assert S == pytest.approx(np.pi, rel=1e-6)


def test_unit_disk_far_field():
    s = system(disk(n=1024))
    p = eval_potential(s, (10.0, 0.0))
    assert p.value == pytest.approx(0.5 * np.log(10), abs=1e-3)
    assert np.allclose(p.gradient, [1 / 20, 0], atol=1e-5)


def test_disk_closed_form_matches_quadrature():
    s = system(disk((0.5, -0.25), 0.8, 2048))
    S = s.total_area
    rho = np.sqrt(S / np.pi)
    for pt in [(0.5, -0.25), (0.9, 0.1), (3.0, 2.0), (-4.0, 0.5)]:
        q = eval_potential(s, pt)
        o = disk_potential((0.5, -0.25), rho, pt)
        assert q.value == pytest.approx(o.value, abs=1e-6)
        assert np.allclose(q.gradient, o.gradient, atol=1e-6)
        assert np.allclose(q.hessian, o.hessian, atol=1e-6)


@pytest.mark.parametrize("ratio", [1.0, 1.5, 2.0, 4.0, 10.0])
def test_ellipse_center_hessian(ratio):
    a, b = ratio, 1.0
    p = eval_potential(system(ellipse(a, b, 4096)), (0.0, 0.0))
    assert np.allclose(p.hessian, np.diag([b / (a + b), a / (a + b)]), atol=1e-4)


def test_ellipse_closed_form():
    p = ellipse_potential(2, 1, (0.5, 0.2))
    assert np.allclose(p.gradient, [0.5 / 3, 0.4 / 3])
    assert np.allclose(ellipse_potential(1, 1, (0.1, 0.1)).hessian, np.eye(2) / 2)
    for a, b in [(3, 1), (1, 4), (2.5, 0.7)]:
        h = ellipse_potential(a, b, (0, 0)).hessian
        assert h[1, 1] / h[0, 0] == pytest.approx(a / b)
    with pytest.raises(OutsideDomainError):
        ellipse_potential(2, 1, (2.5, 0))


def test_ellipse_gradient_interior_points():
    s = system(ellipse(2, 1, 4096))
    for pt in [(0.5, 0.2), (-1.2, 0.3), (0.1, -0.8)]:
        assert np.allclose(eval_potential(s, pt).gradient, ellipse_potential(2, 1, pt).gradient, atol=1e-5)


def test_cauchy_transform_oracles():
    assert abs(cauchy_transform(system(disk(n=4096)), (0.2, -0.3))) < 1e-6
    assert cauchy_transform(system(ellipse(2, 1, 4096)), (0.3, 0.0)) == pytest.approx(0.1, abs=1e-6)
    with pytest.raises(OutsideDomainError):
        cauchy_transform(system(disk()), (2.0, 0.0))


@pytest.mark.parametrize("n,beta", [(1, 0.5), (2, 1.0), (3, 0.7)])
def test_cauchy_local_model(n, beta):
    # Pi = -(z - conj z)^2/8 + beta Re(z^{2n})/(2n): gradient worked out by hand
    z = 0.31 + 0.17j
    x, y = z.real, z.imag
    gpoly = beta * z ** (2 * n - 1)  # d/dz of Re(z^{2n})/(2n) times 2 gives (Re, -Im)
    grad = np.array([0.0, y]) + np.array([gpoly.real, -gpoly.imag])
    assert cauchy_from_gradient(z, grad) == pytest.approx(z - 2 * beta * z ** (2 * n - 1), abs=1e-14)


# --------------------------------------------------------------- critical points

def test_unit_disk_single_minimum():
    rep = find_critical_points(system(disk(n=512)))
    assert len(rep) == 1
    assert rep[0].kind == "minimum" and np.allclose(rep[0].location, 0, atol=1e-9)


def test_two_disk_axis_roots():
    d0, d1 = disk((0, 0), 1.0, 512), disk((4, 0), 1.0, 512)
    rep = find_critical_points(system(d0, d1))
    rho2 = d1.area / np.pi  # exterior field of a regular n-gon equals that of a disk up to |w|^-n
    x = 2 - np.sqrt(4 - rho2)
    mins = sorted(p.location[0] for p in rep if p.kind == "minimum")
    saddles = [p.location for p in rep if p.kind == "saddle"]
    assert mins == pytest.approx([x, 4 - x], abs=1e-8)
    assert x == pytest.approx(2 - np.sqrt(3), abs=1e-5)
    assert len(saddles) == 1 and np.allclose(saddles[0], [2, 0], atol=1e-8)
    assert len(rep.global_minima) == 2


def test_two_disk_hessian_at_minimum():
    s = system(disk((-2, 0), 1.0, 1024), disk((2, 0), 1.0, 1024))
    rep = find_critical_points(s)
    m = [p for p in rep if p.kind == "minimum"][0]
    x = abs(m.location[0])
    w = x + 2.0  # offset to the far disk centre
    expect = sorted([0.5 - 0.5 / w ** 2, 0.5 + 0.5 / w ** 2])
    assert sorted(m.hessian_eigenvalues) == pytest.approx(expect, abs=1e-5)


def test_ellipse_critical_point():
    rep = find_critical_points(system(ellipse(2, 1, 2048)))
    assert len(rep) == 1
    assert sorted(rep[0].hessian_eigenvalues) == pytest.approx([1 / 3, 2 / 3], abs=1e-5)


def test_critical_point_box_validation():
    with pytest.raises(ValueError):
        find_critical_points(system(disk()), search_box=((0, 0), (0, 1)))
    with pytest.raises(ValueError):
        find_critical_points(GravityPotential.of(system(disk())))


# ------------------------------------------------------------------ breakup

def test_breakup_integral_disk_zero():
    r = breakup_integral(lambda x: 1 - x * x, 1.0)
    assert abs(r.value) < 1e-8 and r.verdict == "no-conclusion"


@pytest.mark.parametrize("a,b", [(2, 1), (1, 2), (3, 0.5), (1.2, 1.0), (5, 1)])
def test_breakup_integral_ellipse(a, b):
    r = breakup_integral(lambda x: b * b * (1 - x * x / (a * a)), a)
    assert r.value == pytest.approx(np.pi * (a - b) / (2 * (a + b)), abs=1e-5)
    assert r.verdict == "no-conclusion"


def test_breakup_integral_dumbbell():
    r = breakup_integral(lambda x: (0.01 + x * x) * (1 - x * x), 1.0)
    assert r.value > np.pi / 2 and r.verdict == "breaks"


def test_breakup_integral_sampled_profile():
    xs = np.linspace(0, 2, 4001)
    r = breakup_integral((xs, 1 - xs ** 2 / 4))
    assert r.value == pytest.approx(np.pi / 6, abs=1e-4)
    with pytest.raises(ValueError):
        breakup_integral((xs, xs - 1))


def test_axis_extrema_counts():
    assert axis_extrema_count(system(disk(n=256))) == 1
    assert axis_extrema_count(system(disk((0, 0), 1, 256), disk((4, 0), 1, 256))) == 3
    dumbbell = profile_domain(lambda x: (0.01 + x * x) * (1 - x * x), 1.0, 1024)
    assert axis_extrema_count(system(dumbbell)) >= 3


def test_axis_extrema_requires_symmetry():
    with pytest.raises(SymmetryError):
        axis_extrema_count(system(disk((0, 0.5), 1, 256), disk((4, 0), 1, 256)))


def test_predict_breakup():
    pair = system(disk((-2, 0), 1, 256), disk((2, 0), 1, 256))
    assert predict_breakup(pair, ("central", (0, 0))) == "breaks"
    assert predict_breakup(system(disk(n=256)), ("central", (0, 0))) == "no-conclusion"
    assert predict_breakup(system(ellipse(2, 1, 512)), ("axial", ((0, 0), (1, 0)))) == "no-conclusion"
    assert predict_breakup(system(ellipse(2, 1, 512))) == "no-conclusion"


def test_near_boundary_guard():
    s = system(disk(n=64))
    v = s.bubbles[0].vertices[3]
    with pytest.raises(NearBoundaryError):
        eval_potential(s, v)


# --------------------------------------------------------------- properties

def _interior_points(rng, inner, k):
    c, rin = inner[int(rng.integers(len(inner)))]
    r = 0.8 * rin * np.sqrt(rng.uniform(0, 1, k))
    th = rng.uniform(0, 2 * np.pi, k)
    return c + np.column_stack([r * np.cos(th), r * np.sin(th)])


def test_poisson_trace_random_systems():
    rng = np.random.default_rng(RNG_SEED)
    worst_in = worst_out = 0.0
    for _ in range(1000):
        s, inner = random_system(rng)
        pot = GravityPotential.of(s)
        pin = _interior_points(rng, inner, 1)
        pout = np.array([[rng.uniform(-3, 9), rng.choice([-1, 1]) * rng.uniform(1.6, 4)]])
        hin = pot.hessian(pin[:, 0] + 1j * pin[:, 1])[0]
        hout = pot.hessian(pout[:, 0] + 1j * pout[:, 1])[0]
        worst_in = max(worst_in, abs(np.trace(hin) - 1))
        worst_out = max(worst_out, abs(np.trace(hout)))
    assert worst_in < 1e-3 and worst_out < 1e-3


def test_gradient_bound_random_systems():
    rng = np.random.default_rng(RNG_SEED + 1)
    violations = 0
    for _ in range(1000):
        s, inner = random_system(rng)
        pot = GravityPotential.of(s)
        pts = np.vstack([_interior_points(rng, inner, 4), rng.uniform(-4, 10, (4, 2))])
        g = pot.gradient(pts[:, 0] + 1j * pts[:, 1], guard=False)
        violations += int(np.sum(np.linalg.norm(g, axis=1) > np.sqrt(s.total_area / np.pi) + 1e-9))
    assert violations == 0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0, 2 * np.pi), st.floats(-3, 3), st.floats(-3, 3))
def test_rigid_motion_covariance(seed, ang, dx, dy):
    rng = np.random.default_rng(seed)
    s, inner = random_system(rng)
    pts = np.vstack([_interior_points(rng, inner, 2), [[1.5, 2.5]]])
    R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    moved = BubbleSystem(tuple(BoundaryCurve(b.vertices @ R.T + [dx, dy]) for b in s.bubbles))
    p0, p1 = GravityPotential.of(s), GravityPotential.of(moved)
    q = pts @ R.T + [dx, dy]
    g0, H0 = p0.grad_hess(pts[:, 0] + 1j * pts[:, 1])
    g1, H1 = p1.grad_hess(q[:, 0] + 1j * q[:, 1])
    assert np.allclose(g1, g0 @ R.T, atol=1e-9)
    assert np.allclose(H1, R @ H0 @ R.T, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0))
def test_breakup_integral_ellipse_identity(a, b):
    r = breakup_integral(lambda x: b * b * (1 - x * x / (a * a)), a)
    assert r.value == pytest.approx(np.pi * (a - b) / (2 * (a + b)), abs=1e-5)
