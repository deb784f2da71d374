"""Sweep orchestration: one directory per point, one aggregated ``sweep.csv``.

``sweep.csv`` holds only quantities that are deterministic given the config
and seed; wall-clock times go to ``timings.csv`` so that reruns compare
byte for byte.
"""

from __future__ import annotations

import os
import re
import time
import traceback
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, as_dict
from .io import write_csv, write_report
from .tasks import COLUMNS, TASKS

OUT_ENV = "FRACINV_OUTPUT_ROOT"


def default_out_root() -> Path:
    return Path(os.environ.get(OUT_ENV, "fracinv-out"))


def _slug(cfg: ExperimentConfig, names) -> str:
    if not names:
        return "single"
    text = "_".join(f"{k}-{getattr(cfg, k)}" for k in names)
    return re.sub(r"[^A-Za-z0-9_.=-]+", "-", text)


def run(cfg: ExperimentConfig, out=None, *, seed: int | None = None, log=None) -> Path:
    """Execute every sweep point of ``cfg``; returns the path of ``sweep.csv``.

    A failing point (floor violation, divergence, bad data) becomes a row with
    ``status`` set to the exception; the remaining points still run.
    """
    if seed is not None:
        cfg = replace(cfg, seed=int(seed))
    root = Path(out) if out is not None else (Path(cfg.out) if cfg.out else default_out_root() / cfg.name)
    root.mkdir(parents=True, exist_ok=True)
    names = cfg.sweep_names
    metrics = COLUMNS[cfg.task]
    header = ["index", "name", "task", "case", *names, *metrics, "status"]
    rows, timings = [], []
    task = TASKS[cfg.task]
    for i, pt in enumerate(cfg.points()):
        rundir = root / "runs" / f"{i:03d}_{_slug(pt, names)}"
        rundir.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        try:
            results = task(pt, rundir)
            status = "ok"
        except Exception as exc:  # crash isolation: record and continue
            results = [{"case": ""}]
            status = f"{type(exc).__name__}: {exc}".replace("\n", " ")
            (rundir / "error.txt").write_text(traceback.format_exc(), encoding="utf-8")
        elapsed = time.perf_counter() - t0
        write_report(rundir / "config.txt", as_dict(pt))
        for res in results:
            rows.append([i, pt.name, pt.task, res.get("case", ""), *(getattr(pt, k) for k in names),
                         *(res.get(m) for m in metrics), status])
        timings.append([i, elapsed])
        if log:
            log(f"[{i + 1}/{len(cfg.points())}] {_slug(pt, names)}: {status} ({elapsed:.2f} s)")
    path = root / "sweep.csv"
    write_csv(path, header, rows)
    write_csv(root / "timings.csv", ["index", "seconds"], timings)
    return path


def read_sweep(path) -> list[dict]:
    import csv

    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))
