from __future__ import annotations

import numpy as np
import pytest

from hsbubble.conformal import exact_family, trace_boundary
from hsbubble.evolution import run_free
from hsbubble.geometry import BubbleSystem
from hsbubble.shapes import disk, ellipse, system


@pytest.fixture(scope="session")
def two_disk_run():
    """Disks R=1 at 0 and r=0.5 at 3, free contraction at q=1 (small bubble is label 1)."""
    s = system(disk((0, 0), 1.0, 256), disk((3, 0), 0.5, 256))
    return run_free(s, 1.0)


@pytest.fixture(scope="session")
def ellipse_run():
    s = system(ellipse(2, 1, 256))
    probes = np.array([[0.3, 0.1], [-0.2, 0.05], [3.0, 0.0], [0.0, 2.5]])
    return run_free(s, 1.0, t_end=0.9 * 2 * np.pi, probes=probes)


@pytest.fixture(scope="session")
def quartic_run():
    c0 = trace_boundary(exact_family("quartic", 0.25, 1.0), 1024)
    probes = np.array([[2.0, 0.0], [0.0, 2.0], [1.5, 1.5]]) * 0.25
    return run_free(BubbleSystem((c0,)), 1.0, probes=probes)


@pytest.fixture(scope="session")
def equal_disks():
    return system(disk((-2, 0), 1.0, 256), disk((2, 0), 1.0, 256))


@pytest.fixture(scope="session")
def dumbbell_run():
    from hsbubble.analysis import dumbbell_family
    from hsbubble.evolution import Numerics
    return run_free(dumbbell_family(0.01), 1.0, numerics=Numerics(h_factor=0.02))


@pytest.fixture(scope="session")
def equal_disks_regulated(equal_disks):
    from hsbubble.evolution import Strategy, run_regulated
    S = equal_disks.areas
    return run_regulated(equal_disks, Strategy.constant(0.5, 0.5, 2 * S[0]))


@pytest.fixture(scope="session")
def equal_disks_region(equal_disks):
    from hsbubble.analysis import accessibility_region
    from hsbubble.evolution import Numerics
    return accessibility_region(equal_disks, 16, Numerics(h_factor=0.02))
