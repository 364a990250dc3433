"""Deterministic CSV / JSON output with atomic writes."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import BoundaryCurve, BubbleSystem

BOUNDARY_HEADER = ("t", "bubble", "idx", "x", "y")


def fmt(x) -> str:
    """Shortest round-trip representation of a float."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def _to_json(obj):
    if isinstance(obj, dict):
        return {str(k): _to_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _to_json(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(_to_json(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def boundary_rows(snapshots: Iterable[BubbleSystem]) -> list[tuple]:
    rows = []
    for snap in snapshots:
        for lab, b in zip(snap.labels, snap.bubbles):
            for i, (x, y) in enumerate(b.vertices):
                rows.append((snap.time, lab, i, x, y))
    return rows


def boundary_csv(snapshots: Iterable[BubbleSystem]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BOUNDARY_HEADER)
    for t, lab, i, x, y in boundary_rows(snapshots):
        w.writerow((fmt(t), int(lab), int(i), fmt(x), fmt(y)))
    return buf.getvalue()


def parse_boundary_csv(text: str) -> list[BubbleSystem]:
    """Inverse of :func:`boundary_csv` (snapshot order and labels kept)."""
    rd = csv.reader(io.StringIO(text))
    header = next(rd, None)
    if header is None or tuple(header) != BOUNDARY_HEADER:
        raise ValueError(f"boundary CSV must start with {','.join(BOUNDARY_HEADER)}")
    snaps: list[tuple[float, dict]] = []
    for lineno, row in enumerate(rd, start=2):
        if not row:
            continue
        try:
            t, lab, i, x, y = float(row[0]), int(row[1]), int(row[2]), float(row[3]), float(row[4])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        if not snaps or snaps[-1][0] != t:
            snaps.append((t, {}))
        pts = snaps[-1][1].setdefault(lab, [])
        if i != len(pts):
            raise ValueError(f"line {lineno}: vertex index {i} out of sequence")
        pts.append((x, y))
    out = []
    for t, bubbles in snaps:
        labs = tuple(bubbles)
        curves = tuple(BoundaryCurve(np.array(bubbles[k]), degenerate=True) for k in labs)
        out.append(BubbleSystem(curves, t, labs))
    return out


def probes_csv(times: Sequence[float], points: np.ndarray, values: Sequence[np.ndarray]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("t", "probe", "x", "y", "phi"))
    for t, row in zip(times, values):
        for k, v in enumerate(row):
            w.writerow((fmt(t), k, fmt(points[k, 0]), fmt(points[k, 1]), fmt(v)))
    return buf.getvalue()


def table_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def read_polyline(path: str | Path) -> np.ndarray:
    """Two-column ``x,y`` file (header optional)."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if rows:
                    raise
    if len(rows) < 3:
        raise ValueError(f"{path}: need at least three vertices")
    return np.array(rows)


class OutputWriter:
    """Single funnel for output files: temp file + rename, plus a manifest."""

    def __init__(self, out_dir: str | Path) -> None:
        self.root = Path(out_dir)
        self.root.mkdir(parents=True, exist_ok=True)
        self.files: list[str] = []

    def write(self, name: str, text: str) -> Path:
        target = self.root / name
        fd, tmp = tempfile.mkstemp(dir=self.root, prefix=f".{name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        if name not in self.files:
            self.files.append(name)
        return target

    def json(self, name: str, obj) -> Path:
        return self.write(name, dumps(obj))

    def manifest(self, status: str, **extra) -> Path:
        rec = {"status": status, "files": sorted(self.files), **extra}
        return self.write("manifest.json", dumps(rec))
