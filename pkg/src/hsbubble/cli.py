"""Command-line entry point: ``hsbubble <command> --config FILE --out DIR``.

Exit codes: 0 success, 2 invalid config, 3 solver failure (or a failed
``check``), 4 regulated run stopped at a cusp.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import analysis as an
from . import io as hio
from . import svg
from .conformal import MapError, exact_family, trace_boundary, univalence_check
from .config import ConfigError, ScenarioConfig, load_config
from .evolution import EvolutionError, Trajectory, run_free, run_regulated
from .geometry import GeometryError, normalize_for_asymptotics
from .potential import (GravityPotential, bounding_box, disk_potential, ellipse_potential,
                        eval_potential, find_critical_points)
from .shapes import ellipse

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_CUSP = 0, 2, 3, 4
SOLVER_ERRORS = (EvolutionError, GeometryError, MapError, an.AnalysisError, np.linalg.LinAlgError)

log = logging.getLogger("hsbubble")


class Context:
    def __init__(self, args, cfg: ScenarioConfig, out: hio.OutputWriter) -> None:
        self.args = args
        self.cfg = cfg
        self.out = out
        self.stride = args.stride or cfg.outputs.stride
        self.opts = cfg.analysis.get(args.command, {}) if isinstance(cfg.analysis.get(args.command, {}), dict) else {}


# ---------------------------------------------------------------- helpers

def _write_trajectory(ctx: Context, traj: Trajectory, prefix: str = "") -> None:
    cfg, out = ctx.cfg, ctx.out
    snaps = traj.snapshots[::ctx.stride]
    if snaps[-1] is not traj.snapshots[-1]:
        snaps.append(traj.snapshots[-1])
    if cfg.outputs.boundary:
        out.write(f"{prefix}boundary.csv", hio.boundary_csv(snaps))
    if cfg.outputs.events:
        out.json(f"{prefix}events.json", [e.to_record() for e in traj.events])
    if cfg.outputs.probes and len(traj.probe_points):
        out.write(f"{prefix}probes.csv", hio.probes_csv(traj.times, traj.probe_points, traj.probe_log))
    if cfg.outputs.svg:
        out.write(f"{prefix}snapshots.svg", svg.snapshots_svg(snaps, 1, title=f"{traj.mode} contraction"))
    acc = traj.accounted_areas()
    expected = traj.initial_area - (traj.times - traj.times[0]) * sum(traj.fluxes[0].values())
    out.json(f"{prefix}summary.json", {
        "mode": traj.mode, "termination": traj.termination, "detail": traj.termination_detail,
        "t_end": traj.total_time, "t_star": traj.t_star, "h": traj.h, "steps": len(traj.snapshots),
        "initial_area": traj.initial_area,
        "area_law_max_rel_error": float(np.max(np.abs(acc - expected)) / traj.initial_area)
        if traj.mode == "free" else None})


def _simulate(ctx: Context, system) -> Trajectory:
    cfg = ctx.cfg
    if cfg.mode == "free":
        return run_free(system, cfg.rate, cfg.t_end, cfg.probes, cfg.numerics)
    return run_regulated(system, cfg.strategy, cfg.probes, cfg.numerics)


# --------------------------------------------------------------- commands

def cmd_simulate(ctx: Context) -> int:
    system = ctx.cfg.build_system()
    traj = _simulate(ctx, system)
    _write_trajectory(ctx, traj)
    if traj.termination in ("completed", "bubble_vanished") and ctx.opts.get("contraction_points", True):
        pts = an.contraction_points(traj)
        ctx.out.json("contraction_points.json", [p.to_record() for p in pts])
    log.info("simulate: %s at t=%.6g, %d events", traj.termination, traj.total_time, len(traj.events))
    return EXIT_CUSP if traj.termination == "cusp" else EXIT_OK


def cmd_potential(ctx: Context) -> int:
    system = ctx.cfg.build_system()
    opts = ctx.opts
    box = opts.get("box")
    box = tuple(map(tuple, box)) if box else bounding_box(system, float(opts.get("margin", 0.25)))
    rep = find_critical_points(system, box, grid=int(ctx.args.grid or opts.get("grid", 32)))
    recs = [p.to_record() for p in rep.points]
    ctx.out.json("critical_points.json", {"points": recs, "failures": [
        {"seed": f.seed, "reason": f.reason, "last": f.last, "gradient_norm": f.gradient_norm} for f in rep.failures]})
    ctx.out.write("critical_points.csv", hio.table_csv(
        ("x", "y", "kind", "degree", "eig1", "eig2", "axis_angle", "global_min"),
        [(r["x"], r["y"], r["kind"], r["degree"], r["eig1"], r["eig2"], r["axis_angle"], r["global_min"])
         for r in recs]))
    if len(ctx.cfg.probes):
        rows = []
        for p in ctx.cfg.probes:
            pr = eval_potential(system, p, guard=False)
            rows.append((p[0], p[1], pr.value, pr.gradient[0], pr.gradient[1],
                         pr.hessian[0, 0], pr.hessian[0, 1], pr.hessian[1, 1]))
        ctx.out.write("potential_probes.csv", hio.table_csv(
            ("x", "y", "value", "gx", "gy", "hxx", "hxy", "hyy"), rows))
    log.info("potential: %d critical points, %d failed seeds", len(rep.points), len(rep.failures))
    return EXIT_OK


def cmd_exact(ctx: Context) -> int:
    opts = ctx.opts
    kind = opts.get("kind", "quartic")
    beta = float(opts.get("beta", 1.0))
    As = [float(a) for a in opts.get("A", list(np.geomspace(0.1, 0.001, 8)))]
    n = int(opts.get("n", 2048))
    if not As or min(As) <= 0:
        raise ConfigError("analysis.exact.A", "must be a nonempty list of positive values")
    curves, uni = [], []
    for A in As:
        fmap = exact_family(kind, A, beta)
        chk = univalence_check(fmap, allow_cusps=kind == "saddle")
        uni.append({"A": A, "ok": chk.ok, "coeffs": [[c.real, c.imag] for c in fmap.coeffs],
                    "formula_area": fmap.formula_area})
        curves.append(trace_boundary(fmap, n))
    from .geometry import BubbleSystem

    snaps = [BubbleSystem((c,), A) for c, A in zip(curves, As)]
    ctx.out.write("boundary.csv", hio.boundary_csv(snaps))
    ctx.out.json("univalence.json", uni)
    nn = 1.5 if kind == "saddle" else 2
    fit = an.fit_limit_curve(curves, nn, beta, kind="saddle" if kind == "saddle" else "degenerate", times=As)
    ctx.out.json("fit.json", fit.to_record())
    if ctx.cfg.outputs.svg:
        from .conformal import limit_curve, saddle_node_curve

        target = saddle_node_curve(beta, 1024) if kind == "saddle" else limit_curve(2, beta, 0.0, 1024)
        last = normalize_for_asymptotics(curves[-1].vertices, nn, measure="width")
        ctx.out.write("limit_overlay.svg", svg.overlay_svg(last.vertices, target.vertices, fit.residuals[-1],
                                                           title=f"{kind} family, A={As[-1]:.6g}"))
    log.info("exact: final sup-distance %.3g (%s)", fit.residuals[-1], "pass" if fit.passed else "fail")
    return EXIT_OK


def cmd_region(ctx: Context) -> int:
    system = ctx.cfg.build_system()
    grid = int(ctx.args.grid or ctx.opts.get("grid", 16))
    region = an.accessibility_region(system, grid, ctx.cfg.numerics)
    ctx.out.write("region.csv", hio.table_csv(("i", "j", "X", "Y", "status"),
                                              [(r["i"], r["j"], r["X"], r["Y"], r["status"]) for r in region.records()]))
    ctx.out.json("region.json", {"S1": region.S1, "S2": region.S2, "resolution": grid,
                                 "origin_accessible": region.origin_accessible,
                                 "diagonal_defect": region.diagonal_defect(),
                                 "rays": [{"w": w, "reach": r, "termination": t} for w, r, t in
                                          zip(region.ray_weights, region.ray_reach, region.ray_termination)],
                                 "free_path": region.free_path})
    if ctx.cfg.outputs.svg:
        ctx.out.write("region.svg", svg.region_svg(region))
    return EXIT_OK


def cmd_sync(ctx: Context) -> int:
    system = ctx.cfg.build_system()
    rep = an.find_synchronizing(system, ctx.cfg.numerics)
    ctx.out.json("sync.json", rep.to_record())
    log.info("sync: %s", "found" if rep.strategy is not None else "none")
    return EXIT_OK


def cmd_asymptotics(ctx: Context) -> int:
    system = ctx.cfg.build_system()
    opts = ctx.opts
    kind = opts.get("kind", "ellipse")
    traj = run_free(system, ctx.cfg.rate, ctx.cfg.t_end, numerics=ctx.cfg.numerics)
    _write_trajectory(ctx, traj)
    label = int(opts.get("label", system.labels[0]))
    if kind == "ellipse":
        pts = [p for p in an.contraction_points(traj) if p.label == label]
        if not pts:
            if traj.t_star > traj.total_time * (1 + 1e-9):
                # stopped early: use the global minimum of the initial potential
                rep = find_critical_points(system, grid=16)
                mins = rep.global_minima
                if not mins:
                    raise an.AnalysisError("no minimum of the potential")
                loc = mins[0].location
            else:
                raise an.AnalysisError(f"bubble {label} has no contraction point")
        else:
            loc = pts[0].minimum if pts[0].minimum is not None else pts[0].point
        H = GravityPotential.of(system).hessian(np.asarray(loc)[None, :], guard=False)[0]
        fit = an.fit_ellipse_asymptotics(traj, label, H, k=int(opts.get("k", 10)))
    else:
        fit = an.fit_limit_curve(traj, float(opts.get("n", 2)), float(opts.get("beta", 1.0)),
                                 float(opts.get("alpha", 0.0)), kind="saddle" if kind == "saddle" else "degenerate",
                                 center=opts.get("center", (0.0, 0.0)), label=label)
    ctx.out.json("fit.json", fit.to_record())
    return EXIT_OK


def cmd_sweep(ctx: Context) -> int:
    opts = ctx.opts
    fam = opts.get("family", "dumbbell")
    if fam != "dumbbell":
        raise ConfigError("analysis.sweep.family", f"unknown family {fam!r}")
    lo, hi = opts.get("s_range", [0.01, 1.0])
    rep = an.rupture_boundary_sweep(an.dumbbell_family, (float(lo), float(hi)), ctx.cfg.numerics,
                                    tol=float(opts.get("tol", 1e-3)), coarse=int(opts.get("coarse", 5)),
                                    profile=an.dumbbell_profile)
    ctx.out.json("sweep.json", rep.to_record())
    return EXIT_OK


def _random_polygon(rng: np.random.Generator, center, scale: float) -> np.ndarray:
    k = int(rng.integers(8, 24))
    th = np.sort(rng.uniform(0, 2 * np.pi, k))
    r = scale * rng.uniform(0.3, 1.0, k)
    return np.column_stack([center[0] + r * np.cos(th), center[1] + r * np.sin(th)])


def cmd_check(ctx: Context) -> int:
    """Quick invariant suite: oracles and the gradient bound on random systems."""
    from .geometry import BoundaryCurve, BubbleSystem

    seed = ctx.cfg.seed
    rng = np.random.default_rng(seed)
    results = {}
    e = GravityPotential([ellipse(2, 1, 2048)]).hessian(np.array([[0.0, 0.0]]))[0]
    ex = ellipse_potential(2, 1, (0, 0)).hessian
    results["ellipse_hessian"] = {"error": float(np.abs(e - ex).max()), "pass": bool(np.abs(e - ex).max() < 1e-4)}
    d = disk_potential((0, 0), 1.0, (0.3, 0.2))
    results["disk_gradient"] = {"value": d.gradient, "pass": bool(np.allclose(d.gradient, [0.15, 0.1]))}
    worst, viol = -np.inf, 0
    n_sys = int(ctx.opts.get("samples", 200))
    for _ in range(n_sys):
        curves = []
        for j in range(int(rng.integers(1, 3))):
            v = _random_polygon(rng, (4.0 * j, rng.uniform(-0.5, 0.5)), 1.0)
            curves.append(BoundaryCurve(v))
        sysm = BubbleSystem(tuple(curves))
        pot = GravityPotential.of(sysm)
        pts = rng.uniform(-2, 6, size=(8, 2))
        g = np.linalg.norm(pot.gradient(pts, guard=False), axis=1)
        bound = np.sqrt(sysm.total_area / np.pi)
        worst = max(worst, float((g - bound).max()))
        viol += int(np.sum(g > bound + 1e-9))
    results["gradient_bound"] = {"systems": n_sys, "violations": viol, "worst_excess": worst, "pass": viol == 0}
    ok = all(r["pass"] for r in results.values())
    ctx.out.json("check.json", {"seed": seed, "results": results, "pass": ok})
    for name, r in results.items():
        log.info("check %-16s %s", name, "pass" if r["pass"] else "FAIL")
    return EXIT_OK if ok else EXIT_SOLVER


COMMANDS = {"simulate": cmd_simulate, "potential": cmd_potential, "exact": cmd_exact, "region": cmd_region,
            "sync": cmd_sync, "asymptotics": cmd_asymptotics, "sweep": cmd_sweep, "check": cmd_check}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario file (.json, .yaml)")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", type=int, default=None, help="random seed (overrides the config)")
    common.add_argument("--stride", type=int, default=None, help="snapshot export stride")
    common.add_argument("--grid", type=int, default=None, help="grid resolution (region, potential)")
    common.add_argument("--quiet", action="store_true", help="only warnings and errors")
    p = argparse.ArgumentParser(prog="hsbubble", description="Hele-Shaw bubble contraction toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or name).strip().splitlines()[0])
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(levelname)s %(message)s")
    out = None
    try:
        if args.stride is not None and args.stride < 1:
            raise ConfigError("--stride", "must be >= 1")
        if args.grid is not None and args.grid < 1:
            raise ConfigError("--grid", "must be >= 1")
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        out = hio.OutputWriter(args.out)
        code = COMMANDS[args.command](Context(args, cfg, out))
        out.manifest("cusp" if code == EXIT_CUSP else "ok" if code == EXIT_OK else "failed",
                     command=args.command, exit_code=code)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        if out is not None:
            out.manifest("invalid", command=args.command, error=str(exc), exit_code=EXIT_CONFIG)
        return EXIT_CONFIG
    except SOLVER_ERRORS as exc:
        print(f"solver failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        if out is not None:
            out.manifest("failed", command=args.command, error=f"{type(exc).__name__}: {exc}",
                         exit_code=EXIT_SOLVER)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
