"""Bubble contraction in a Hele-Shaw cell: potentials, exact maps, simulation, analysis."""
from __future__ import annotations

from .geometry import BoundaryCurve, BubbleSystem, GeometryError
from .potential import GravityPotential, eval_potential, find_critical_points
from .evolution import FluxSpec, Numerics, Strategy, Trajectory, run_free, run_regulated, solve_field
from .conformal import LaurentMap, KufarevMap, exact_family, kufarev_solve, trace_boundary

__version__ = "0.1.0"

__all__ = [
    "BoundaryCurve", "BubbleSystem", "GeometryError", "GravityPotential", "eval_potential",
    "find_critical_points", "FluxSpec", "Numerics", "Strategy", "Trajectory", "run_free",
    "run_regulated", "solve_field", "LaurentMap", "KufarevMap", "exact_family", "kufarev_solve",
    "trace_boundary",
]
