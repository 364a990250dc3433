"""Test domains: disks, ellipses, symmetric profile domains."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .geometry import BoundaryCurve, BubbleSystem, resample


def disk(center=(0.0, 0.0), radius: float = 1.0, n: int = 256) -> BoundaryCurve:
    th = 2 * np.pi * np.arange(n) / n
    c = np.asarray(center, dtype=float)
    return BoundaryCurve(np.column_stack([c[0] + radius * np.cos(th), c[1] + radius * np.sin(th)]))


def ellipse(a: float, b: float, n: int = 256, center=(0.0, 0.0), angle: float = 0.0) -> BoundaryCurve:
    th = 2 * np.pi * np.arange(n) / n
    x, y = a * np.cos(th), b * np.sin(th)
    ca, sa = np.cos(angle), np.sin(angle)
    c = np.asarray(center, dtype=float)
    return BoundaryCurve(np.column_stack([c[0] + ca * x - sa * y, c[1] + sa * x + ca * y]))


def profile_domain(f: Callable, b: float, n: int = 512, spacing: float | None = None) -> BoundaryCurve:
    """The x-axis-symmetric domain ``|x| < b, y**2 < f(x)``.

    ``f`` must be even, positive on ``(-b, b)`` and vanish at ``+-b``.
    """
    th = 2 * np.pi * np.arange(8 * n) / (8 * n)
    x = b * np.cos(th)
    y = np.sign(np.sin(th)) * np.sqrt(np.maximum(f(x), 0.0))
    dense = BoundaryCurve(np.column_stack([x, y]))
    return resample(dense, spacing if spacing is not None else dense.perimeter / n)


def system(*curves: BoundaryCurve, time: float = 0.0) -> BubbleSystem:
    return BubbleSystem(tuple(curves), time=time)
