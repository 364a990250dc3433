from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hsbubble.geometry import (AmbiguousPinchError, BoundaryCurve, BubbleSystem, GeometryError,
                               OrientationError, area, centroid, cusp_exponent, diameter, find_pinches,
                               hausdorff_distance, is_simple, normalize_for_asymptotics, perimeter,
                               resample, second_moments, signed_area, split_on_pinch)
from hsbubble.conformal import saddle_node_curve
from hsbubble.shapes import disk, ellipse, profile_domain

SQUARE = np.array([[0, 0], [2, 0], [2, 2], [0, 2], [0, 1.5], [0, 1.0], [0, 0.5], [0, 0.25]], float)


def power_cusp(p: float, n: int = 600) -> np.ndarray:
    """Closed curve with |y| = x**p for x in [0, 1]; tip at the origin."""
    x = np.linspace(0, 1, n // 2) ** 2  # cluster samples at the tip
    upper = np.column_stack([x, x ** p])
    lower = np.column_stack([x[::-1], -(x[::-1] ** p)])
    return np.vstack([lower[:-1], upper[:-1]])


def test_square_measures():
    assert area(SQUARE) == pytest.approx(4.0)
    assert perimeter(SQUARE) == pytest.approx(8.0)
    assert np.allclose(centroid(SQUARE), [1, 1])
    assert diameter(SQUARE) == pytest.approx(np.sqrt(8))
    I = second_moments(SQUARE)
    assert I[0, 0] == pytest.approx(16 / 12) and I[1, 1] == pytest.approx(16 / 12)
    assert I[0, 1] == pytest.approx(0.0, abs=1e-12)


def test_reversed_curve_is_rejected():
    with pytest.raises(OrientationError):
        BoundaryCurve(SQUARE[::-1])
    assert signed_area(SQUARE[::-1]) == pytest.approx(-4.0)


def test_too_few_and_repeated_vertices():
    with pytest.raises(GeometryError):
        BoundaryCurve(SQUARE[:4])
    dup = np.vstack([SQUARE[:2], SQUARE[1:]])
    with pytest.raises(GeometryError):
        BoundaryCurve(dup)


def test_non_finite_rejected():
    bad = SQUARE.copy()
    bad[3, 0] = np.nan
    with pytest.raises(GeometryError):
        BoundaryCurve(bad)


def test_disk_area_converges():
    for n in (64, 256, 1024):
        exact = 0.5 * n * np.sin(2 * np.pi / n)
        assert disk(n=n).area == pytest.approx(exact, rel=1e-13)


def test_ellipse_diameter():
    assert diameter(ellipse(3, 1, 512)) == pytest.approx(6.0, rel=1e-12)


def test_figure_eight_not_simple():
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    eight = np.column_stack([np.sin(t), np.sin(t) * np.cos(t)])
    assert not is_simple(eight)
    assert is_simple(disk().vertices)


def test_hausdorff_concentric_circles():
    assert hausdorff_distance(disk(radius=1.0, n=512), disk(radius=1.3, n=512)) == pytest.approx(0.3, abs=1e-4)


def test_resample_spacing_and_area():
    e = ellipse(2, 1, 100)
    r = resample(e, 0.05)
    steps = np.linalg.norm(np.roll(r.vertices, -1, 0) - r.vertices, axis=1)
    assert steps.max() / steps.min() < 1.01
    assert r.area == pytest.approx(e.area, rel=1e-12)


def test_resample_idempotent():
    e = resample(ellipse(2, 1, 300), 0.04)
    again = resample(e, 0.04)
    assert hausdorff_distance(e, again) < 1e-6


def test_resample_rejects_bad_spacing():
    with pytest.raises(GeometryError):
        resample(disk(), 0.0)
    with pytest.raises(GeometryError):
        resample(disk(), 10.0)


def _dumbbell(c: float, n: int = 800):
    return profile_domain(lambda x: (c + x * x) * (1 - x * x), 1.0, n)


def test_pinch_found_on_thin_neck():
    d = _dumbbell(1e-4)
    pinches = find_pinches(d, 0.05)
    assert len(pinches) == 1
    i, j, dist = pinches[0]
    mid = 0.5 * (d.vertices[i] + d.vertices[j])
    assert abs(mid[0]) < 0.05 and dist < 0.05


def test_no_pinch_on_disk():
    assert find_pinches(disk(n=400), 0.05) == []


@pytest.mark.parametrize("c", [1e-4, 4e-4, 1e-3])
def test_split_conserves_area(c):
    d = _dumbbell(c)
    clearance = 0.08
    pieces = split_on_pinch(d, clearance)
    assert len(pieces) == 2
    total = sum(p.area for p in pieces)
    assert abs(total - d.area) < clearance ** 2
    assert all(p.area > 0 for p in pieces)


def test_split_without_pinch_returns_input():
    e = ellipse(2, 1, 200)
    assert split_on_pinch(e, 0.1)[0] is e


def test_two_pinches_are_ambiguous():
    # three lobes joined by two thin necks
    f = lambda x: 1e-5 + (x * x - 0.25) ** 2 * (1 - x * x) * 4
    c = profile_domain(f, 1.0, 1200)
    with pytest.raises(AmbiguousPinchError):
        split_on_pinch(c, 0.05)


@pytest.mark.parametrize("p", [1.5, 2.5])
def test_cusp_exponent_synthetic(p):
    fit = cusp_exponent(power_cusp(p), (0.0, 0.0))
    assert fit.is_cusp
    assert fit.exponent == pytest.approx(p, rel=0.1)
    assert fit.axis[0] > 0.99  # body lies along +x


def test_smooth_point_is_not_cusp():
    fit = cusp_exponent(disk(n=1024), (1.0, 0.0))
    assert not fit.is_cusp
    assert fit.exponent == pytest.approx(2.0, rel=0.05)


def test_cusp_point_must_lie_on_curve():
    with pytest.raises(GeometryError):
        cusp_exponent(disk(n=256), (0.0, 0.0))


@pytest.mark.parametrize("beta", [0.5, 1.0])
def test_saddle_curve_cusp(beta):
    fit = cusp_exponent(saddle_node_curve(beta, 4096), (-0.5, 0.0))
    assert fit.is_cusp and fit.exponent == pytest.approx(1.5, abs=0.1)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_normalize_diameter_two(n):
    v = ellipse(0.3, 0.01, 512).vertices
    out = normalize_for_asymptotics(v, n, alpha=0.2)
    assert diameter(out) == pytest.approx(2.0, abs=1e-9)


def test_normalize_width_measure():
    out = normalize_for_asymptotics(ellipse(0.1, 0.001, 256).vertices, 2, measure="width")
    x = out.vertices[:, 0]
    assert x.max() - x.min() == pytest.approx(2.0, abs=1e-12)


def test_bubble_system_validation():
    a, b = disk((0, 0), 1.0), disk((1.5, 0), 1.0)
    with pytest.raises(GeometryError):
        BubbleSystem((a, b)).check_disjoint()
    with pytest.raises(GeometryError):
        BubbleSystem((a, disk((5, 0))), labels=(1, 1))
    s = BubbleSystem((a, disk((5, 0))), labels=(3, 7))
    assert s.bubble(7).centroid[0] == pytest.approx(5.0)
    assert s.contains(np.array([[0, 0], [5, 0.5], [2.5, 0]])).tolist() == [True, True, False]


# ------------------------------------------------------------------ properties

coords = st.floats(-5, 5, allow_nan=False)


@st.composite
def star_polygons(draw):
    k = draw(st.integers(8, 30))
    th = np.sort(np.array(draw(st.lists(st.floats(0, 2 * np.pi, exclude_max=True), min_size=k, max_size=k,
                                        unique=True))))
    if np.min(np.diff(np.concatenate([th, [th[0] + 2 * np.pi]]))) < 1e-3:
        th = np.linspace(0, 2 * np.pi, k, endpoint=False)
    r = np.array(draw(st.lists(st.floats(0.3, 2.0), min_size=k, max_size=k)))
    return np.column_stack([r * np.cos(th), r * np.sin(th)])


@settings(max_examples=60, deadline=None)
@given(star_polygons())
def test_area_positive_and_reversal_negates(v):
    assert signed_area(v) > 0
    assert signed_area(v[::-1]) == pytest.approx(-signed_area(v), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(star_polygons(), coords, coords, st.floats(0, 2 * np.pi))
def test_measures_rigid_invariance(v, dx, dy, ang):
    R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    w = v @ R.T + [dx, dy]
    assert signed_area(w) == pytest.approx(signed_area(v), rel=1e-9)
    assert perimeter(w) == pytest.approx(perimeter(v), rel=1e-9)
    assert diameter(w) == pytest.approx(diameter(v), rel=1e-9)
    assert np.allclose(centroid(w), R @ centroid(v) + [dx, dy], atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(star_polygons(), star_polygons(), star_polygons())
def test_hausdorff_is_a_metric(a, b, c):
    ab, ba = hausdorff_distance(a, b), hausdorff_distance(b, a)
    assert ab == pytest.approx(ba, rel=1e-9, abs=1e-12)
    assert hausdorff_distance(a, c) <= ab + hausdorff_distance(b, c) + 1e-9
    assert hausdorff_distance(a, a) < 1e-12


def test_regular_64gon_area():
    assert disk(n=64).area == pytest.approx(32 * np.sin(np.pi / 32), abs=1e-12)
    assert disk(n=64).area == pytest.approx(3.136548, abs=1e-6)


def test_ellipse_trace_area_second_order():
    errs = [abs(ellipse(2, 1, n).area - 2 * np.pi) for n in (128, 256)]
    assert errs[1] == pytest.approx(errs[0] / 4, rel=0.02)


def test_translated_circle_hausdorff():
    assert hausdorff_distance(disk(n=512), disk((0.3, 0), n=512)) == pytest.approx(0.3, abs=1e-4)


def test_resample_unit_circle_count():
    r = resample(disk(n=1000), 2 * np.pi / 100)
    assert abs(len(r) - 100) <= 1
    assert r.area == pytest.approx(np.pi, rel=1e-3)


def test_normalize_is_identity_on_diameter_two():
    c = ellipse(1, 0.5, 256)
    out = normalize_for_asymptotics(c, 1)
    assert np.allclose(out.vertices, c.vertices, atol=1e-12)


def test_split_pieces_on_either_side():
    pieces = split_on_pinch(_dumbbell(1e-4), 0.05)
    xs = sorted(p.centroid[0] for p in pieces)
    assert xs[0] < 0 < xs[1]
    left, right = sorted(pieces, key=lambda p: p.centroid[0])
    assert left.vertices[:, 0].max() < 0.05 and right.vertices[:, 0].min() > -0.05
