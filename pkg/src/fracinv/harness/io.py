"""CSV and report I/O with fixed 17-significant-digit floats, plus noise injection."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from ..fracops import TimeGrid, Trace


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_trace(path, trace: Trace, column: str):
    write_csv(path, ["t", column], zip(trace.t, trace.values))


def read_trace(path, alpha: float) -> Trace:
    """Read a two-column ``t,value`` CSV written on a uniform grid."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 4:
        raise ValueError(f"{path}: need a header and at least three rows")
    try:
        data = np.array([[float(a), float(b)] for a, b, *_ in rows[1:]])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from exc
    t = data[:, 0]
    n = t.size - 1
    grid = TimeGrid(float(t[-1]), n, alpha)
    if abs(t[0]) > 0 or np.max(np.abs(t - grid.nodes)) > 1e-9 * max(1.0, grid.T):
        raise ValueError(f"{path}: times are not a uniform grid starting at 0")
    return Trace(grid, data[:, 1])


def write_field(path, field):
    """``field.csv``: one row per spatial node, first column ``x``, then one column per time."""
    header = ["x"] + [fmt(t) for t in field.grid.nodes]
    rows = ([x, *vals] for x, vals in zip(field.mesh.nodes, field.values))
    write_csv(path, header, rows)


def write_report(path, items: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in items.items():
            if isinstance(v, (list, tuple, np.ndarray)):
                v = " ".join(fmt(x) for x in v)
            else:
                v = fmt(v)
            fh.write(f"{k} = {v}\n")


def make_noise(trace: Trace, level: float, seed: int) -> Trace:
    """Additive uniform noise of amplitude ``level * max|trace|``, reproducible per seed."""
    if not level >= 0:
        raise ValueError(f"noise level must be >= 0, got {level}")
    if level == 0:
        return trace
    amp = level * float(np.max(np.abs(trace.values)))
    rng = np.random.default_rng(seed)
    return trace + amp * rng.uniform(-1.0, 1.0, size=len(trace))
