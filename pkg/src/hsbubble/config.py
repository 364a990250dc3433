"""Scenario files (JSON or YAML) and their validation.

Schema, all quantities dimensionless::

    domains:            # one entry per bubble
      - {type: disk, center: [0, 0], radius: 1, n: 256}
      - {type: ellipse, a: 2, b: 1, center: [0, 0], angle: 0, n: 256}
      - {type: polyline, file: shape.csv}
      - {type: profile, b: 1, x: [...], f: [...], n: 512}   # samples of f on [0, b]
      - {type: dumbbell, c: 0.01, n: 512}
      - {type: laurent, A: 1, coeffs: [0, 0.2], n: 1024}
      - {type: exact, kind: quartic, A: 0.1, beta: 1, n: 1024}
      - {type: kufarev, a: 3, R: 1, r: 0.5, q: 1, t: 1.0, n: 1024}
    mode: free | regulated
    rate: 1.0                       # free mode
    t_end: null                     # free mode, default complete extraction
    strategy:                       # regulated mode
      steps: [[dQ1, dQ2], ...]      # consecutive volumes, or
      rates: [[q1, q2], ...]        # with
      breakpoints: [0, t1, ...]
      rate: 1.0
    probes: [[x, y], ...]
    numerics: {h_factor: 0.01, dt_factor: 0.2, ...}
    outputs: {boundary: true, events: true, probes: true, svg: true, stride: 10}
    analysis: {...}                 # options of the analysis subcommands
    seed: 0
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .conformal import LaurentMap, MapError, exact_family, kufarev_solve, trace_boundary
from .evolution import Numerics, Strategy
from .geometry import BoundaryCurve, BubbleSystem, GeometryError
from .io import read_polyline
from .shapes import disk, ellipse, profile_domain


class ConfigError(ValueError):
    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


DOMAIN_TYPES = ("disk", "ellipse", "polyline", "profile", "dumbbell", "laurent", "exact", "kufarev")
OUTPUT_KEYS = {"boundary", "events", "probes", "svg", "stride"}
TOP_KEYS = {"domains", "mode", "rate", "t_end", "strategy", "probes", "numerics", "outputs", "analysis", "seed"}


@dataclass
class Outputs:
    boundary: bool = True
    events: bool = True
    probes: bool = True
    svg: bool = True
    stride: int = 10


@dataclass
class ScenarioConfig:
    domains: list[dict]
    mode: str = "free"
    rate: float = 1.0
    t_end: float | None = None
    strategy: Strategy | None = None
    probes: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    numerics: Numerics = field(default_factory=Numerics)
    outputs: Outputs = field(default_factory=Outputs)
    analysis: dict = field(default_factory=dict)
    seed: int = 0
    base_dir: Path = field(default_factory=Path.cwd)

    def build_system(self) -> BubbleSystem:
        curves = [build_domain(d, f"domains[{k}]", self.base_dir) for k, d in enumerate(self.domains)]
        try:
            system = BubbleSystem(tuple(curves))
            system.check_disjoint()
        except GeometryError as exc:
            raise ConfigError("domains", str(exc)) from None
        return system


def _num(spec: dict, key: str, path: str, default=None, positive: bool = False, nonneg: bool = False,
         integer: bool = False) -> Any:
    where = f"{path}.{key}" if path else key
    if key not in spec:
        if default is None:
            raise ConfigError(where, "is required")
        return default
    v = spec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(where, f"must be a number, got {v!r}")
    if not np.isfinite(v):
        raise ConfigError(where, "must be finite")
    if integer and int(v) != v:
        raise ConfigError(where, f"must be an integer, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(where, f"must be positive, got {v!r}")
    if nonneg and v < 0:
        raise ConfigError(where, f"must be nonnegative, got {v!r}")
    return int(v) if integer else float(v)


def _point(v, path: str) -> np.ndarray:
    try:
        p = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(path, f"must be a pair of numbers, got {v!r}") from None
    if p.shape != (2,) or not np.isfinite(p).all():
        raise ConfigError(path, f"must be a pair of finite numbers, got {v!r}")
    return p


def _check_keys(spec: dict, allowed: set, path: str) -> None:
    extra = sorted(set(spec) - allowed)
    if extra:
        raise ConfigError(f"{path}.{extra[0]}", "unknown field")


def build_domain(spec: dict, path: str, base_dir: Path = Path(".")) -> BoundaryCurve:
    """One bubble boundary from its spec."""
    if not isinstance(spec, dict):
        raise ConfigError(path, "must be a mapping")
    kind = spec.get("type")
    if kind not in DOMAIN_TYPES:
        raise ConfigError(f"{path}.type", f"must be one of {', '.join(DOMAIN_TYPES)}, got {kind!r}")
    try:
        if kind == "disk":
            _check_keys(spec, {"type", "center", "radius", "n"}, path)
            return disk(_point(spec.get("center", (0, 0)), f"{path}.center"),
                        _num(spec, "radius", path, positive=True), _num(spec, "n", path, 256, integer=True))
        if kind == "ellipse":
            _check_keys(spec, {"type", "a", "b", "center", "angle", "n"}, path)
            return ellipse(_num(spec, "a", path, positive=True), _num(spec, "b", path, positive=True),
                           _num(spec, "n", path, 256, integer=True),
                           _point(spec.get("center", (0, 0)), f"{path}.center"), _num(spec, "angle", path, 0.0))
        if kind == "polyline":
            _check_keys(spec, {"type", "file"}, path)
            if not isinstance(spec.get("file"), str):
                raise ConfigError(f"{path}.file", "must be a file path")
            f = Path(spec["file"])
            f = f if f.is_absolute() else base_dir / f
            try:
                return BoundaryCurve(read_polyline(f))
            except OSError as exc:
                raise ConfigError(f"{path}.file", str(exc)) from None
        if kind == "profile":
            _check_keys(spec, {"type", "b", "x", "f", "n"}, path)
            b = _num(spec, "b", path, positive=True)
            xs = np.asarray(spec.get("x", []), dtype=float)
            fs = np.asarray(spec.get("f", []), dtype=float)
            if xs.ndim != 1 or len(xs) < 3 or xs.shape != fs.shape:
                raise ConfigError(f"{path}.x", "x and f must be equal-length lists of at least 3 samples")
            if np.any(np.diff(xs) <= 0) or xs[0] < 0 or xs[-1] > b:
                raise ConfigError(f"{path}.x", "samples must increase within [0, b]")
            if np.any(fs[xs < b] <= 0):
                raise ConfigError(f"{path}.f", "profile must be positive inside (-b, b)")
            return profile_domain(lambda x: np.interp(np.abs(x), xs, fs), b, _num(spec, "n", path, 512, integer=True))
        if kind == "dumbbell":
            _check_keys(spec, {"type", "c", "n"}, path)
            c = _num(spec, "c", path, positive=True)
            return profile_domain(lambda x: (c + x * x) * (1 - x * x), 1.0, _num(spec, "n", path, 512, integer=True))
        n = _num(spec, "n", path, 1024, integer=True)
        if kind == "laurent":
            _check_keys(spec, {"type", "A", "coeffs", "n"}, path)
            coeffs = spec.get("coeffs", [])
            if not isinstance(coeffs, list):
                raise ConfigError(f"{path}.coeffs", "must be a list")
            fmap = LaurentMap(_num(spec, "A", path, positive=True), tuple(complex(*c) if isinstance(c, list) else c
                                                                         for c in coeffs))
        elif kind == "exact":
            _check_keys(spec, {"type", "kind", "A", "beta", "n"}, path)
            fmap = exact_family(str(spec.get("kind")), _num(spec, "A", path, positive=True),
                                _num(spec, "beta", path, nonneg=True))
        else:
            _check_keys(spec, {"type", "a", "R", "r", "q", "t", "n"}, path)
            fmap = kufarev_solve(_num(spec, "a", path, positive=True), _num(spec, "R", path, positive=True),
                                 _num(spec, "r", path, positive=True), _num(spec, "q", path, 1.0, positive=True),
                                 _num(spec, "t", path, nonneg=True))
        curve = trace_boundary(fmap, n)
        if curve.degenerate:
            raise ConfigError(path, "map boundary is not a simple curve")
        return curve
    except (MapError, GeometryError) as exc:
        raise ConfigError(path, str(exc)) from None


def _numerics(spec: dict) -> Numerics:
    if not isinstance(spec, dict):
        raise ConfigError("numerics", "must be a mapping")
    names = {f.name for f in dataclasses.fields(Numerics)}
    for k in spec:
        if k not in names:
            raise ConfigError(f"numerics.{k}", "unknown field")
    vals = {}
    for k, v in spec.items():
        if v is None and k == "h":
            continue
        vals[k] = _num(spec, k, "numerics", integer=k in ("min_nodes", "max_events", "max_steps", "filter_order"))
    try:
        return Numerics(**vals)
    except ValueError as exc:
        msg = str(exc)
        field_name = msg.split("=")[0].replace("numerics.", "") if "=" in msg else ""
        raise ConfigError(f"numerics.{field_name}" if field_name in names else "numerics", msg) from None


def _strategy(spec, n_bubbles: int) -> Strategy:
    if not isinstance(spec, dict):
        raise ConfigError("strategy", "must be a mapping")
    rate = _num(spec, "rate", "strategy", 1.0, positive=True)
    try:
        if "steps" in spec:
            steps = spec["steps"]
            if not isinstance(steps, list) or not steps:
                raise ConfigError("strategy.steps", "must be a nonempty list of [dQ1, dQ2]")
            pairs = []
            for k, s in enumerate(steps):
                if not (isinstance(s, list) and len(s) == 2):
                    raise ConfigError(f"strategy.steps[{k}]", "must be [dQ1, dQ2]")
                for j, v in enumerate(s):
                    if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
                        raise ConfigError(f"strategy.steps[{k}][{j}]", f"must be a nonnegative number, got {v!r}")
                pairs.append((float(s[0]), float(s[1])))
            return Strategy.from_volumes(pairs, rate)
        rates, bps = spec.get("rates"), spec.get("breakpoints")
        if not isinstance(rates, list) or not isinstance(bps, list):
            raise ConfigError("strategy", "needs either steps or rates + breakpoints")
        for k, r in enumerate(rates):
            if not (isinstance(r, list) and len(r) == 2):
                raise ConfigError(f"strategy.rates[{k}]", "must be [q1, q2]")
            for j, v in enumerate(r):
                if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
                    raise ConfigError(f"strategy.rates[{k}][{j}]", f"must be a nonnegative number, got {v!r}")
        return Strategy(tuple(bps), tuple(tuple(r) for r in rates))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("strategy", str(exc)) from None


def parse_config(raw: dict, base_dir: Path | str = ".") -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a mapping")
    for k in raw:
        if k not in TOP_KEYS:
            raise ConfigError(str(k), "unknown field")
    doms = raw.get("domains")
    if not isinstance(doms, list) or not doms:
        raise ConfigError("domains", "must be a nonempty list")
    mode = raw.get("mode", "free")
    if mode not in ("free", "regulated"):
        raise ConfigError("mode", f"must be free or regulated, got {mode!r}")
    if mode == "regulated" and len(doms) != 2:
        raise ConfigError("domains", "regulated mode requires exactly two bubbles")
    cfg = ScenarioConfig(domains=list(doms), mode=mode, base_dir=Path(base_dir))
    cfg.rate = _num(raw, "rate", "", 1.0, positive=True)
    if raw.get("t_end") is not None:
        cfg.t_end = _num(raw, "t_end", "", positive=True)
    if mode == "regulated":
        if "strategy" not in raw:
            raise ConfigError("strategy", "is required in regulated mode")
        cfg.strategy = _strategy(raw["strategy"], len(doms))
    elif "strategy" in raw:
        raise ConfigError("strategy", "only valid in regulated mode")
    if "probes" in raw:
        pr = raw["probes"]
        if not isinstance(pr, list):
            raise ConfigError("probes", "must be a list of [x, y]")
        cfg.probes = np.array([_point(p, f"probes[{k}]") for k, p in enumerate(pr)]).reshape(-1, 2)
    if "numerics" in raw:
        cfg.numerics = _numerics(raw["numerics"])
    if "outputs" in raw:
        out = raw["outputs"]
        if not isinstance(out, dict):
            raise ConfigError("outputs", "must be a mapping")
        for k, v in out.items():
            if k not in OUTPUT_KEYS:
                raise ConfigError(f"outputs.{k}", "unknown field")
            if k == "stride":
                if not (isinstance(v, int) and not isinstance(v, bool) and v >= 1):
                    raise ConfigError("outputs.stride", f"must be a positive integer, got {v!r}")
            elif not isinstance(v, bool):
                raise ConfigError(f"outputs.{k}", f"must be true or false, got {v!r}")
        cfg.outputs = Outputs(**out)
    if "analysis" in raw:
        if not isinstance(raw["analysis"], dict):
            raise ConfigError("analysis", "must be a mapping")
        cfg.analysis = dict(raw["analysis"])
    if "seed" in raw:
        cfg.seed = _num(raw, "seed", "", integer=True, nonneg=True)
    for k, d in enumerate(doms):
        if not isinstance(d, dict) or d.get("type") not in DOMAIN_TYPES:
            raise ConfigError(f"domains[{k}].type",
                              f"must be one of {', '.join(DOMAIN_TYPES)}, got {d.get('type') if isinstance(d, dict) else d!r}")
    return cfg


def load_config(path: str | Path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(path), str(exc)) from None
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            import yaml

            raw = yaml.safe_load(text)
        else:
            raw = json.loads(text)
    except Exception as exc:  # parser errors carry their own position info
        raise ConfigError(str(path), f"cannot parse: {exc}") from None
    return parse_config(raw, path.parent)
