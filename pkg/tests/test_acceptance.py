"""Acceptance criteria 1-10, each driven by a shipped config through ``run``.

Every test records one ``C<n> PASS|FAIL`` line, which the terminal summary
prints after the session.  Tolerances are pinned here and never derived from
the config files.
"""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from fracinv.fracops import TimeGrid, Trace
from fracinv.harness import parse_config, run
from fracinv.harness.runner import read_sweep
from fracinv.inverse import FloorViolation, ReconstructionConfig, reconstruct_source_f
from fracinv.forward import SourceProblem

from .conftest import ACCEPTANCE_LINES, make_basis

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"
BASELINE = Path(__file__).parent / "data" / "stability_baseline.json"


@pytest.fixture(scope="module")
def outdir(tmp_path_factory):
    return tmp_path_factory.mktemp("acceptance")


def sweep(name, outdir, sub=""):
    cfg = parse_config(CONFIGS / f"{name}.ini")
    rows = read_sweep(run(cfg, outdir / (name + sub)))
    assert all(r["status"] == "ok" for r in rows), [r["status"] for r in rows]
    return rows


def num(row, key):
    return float(row[key])


def record(n, ok, detail):
    ACCEPTANCE_LINES.append(f"C{n:<2d} {'PASS' if ok else 'FAIL'}  {detail}")
    return ok


def test_c01_ml_identities(outdir):
    rows = {r["case"]: r for r in sweep("c01_ml_identities", outdir)}
    tol = {"exp": 1e-12, "cos": 1e-12, "recurrence": 1e-9, "erfc": 1e-10}
    ok = all(num(rows[c], "max_error") <= t for c, t in tol.items())
    detail = ", ".join(f"{c} {num(rows[c], 'max_error'):.1e}" for c in tol)
    assert record(1, ok, detail)


def test_c02_smoothing_law(outdir):
    rows = sweep("c02_smoothing", outdir)
    devs = {float(r["gamma"]): num(r, "slope") - (0.5 * (1 - float(r["gamma"])) - 1) for r in rows}
    ok = sorted(devs) == [0.0, 0.25, 0.5] and all(abs(d) <= 0.05 for d in devs.values())
    detail = ", ".join(f"gamma={g}: slope dev {d:+.3f}" for g, d in devs.items())
    assert record(2, ok, detail + " (tol 0.05)")


def test_c03_l1_order(outdir):
    (row,) = sweep("c03_l1_order", outdir)
    order = num(row, "order")
    assert record(3, abs(order - 1.5) <= 0.2, f"order {order:.3f} (target 1.5 +- 0.2)")


def test_c04_cross_solver(outdir):
    rows = sweep("c04_cross_solver", outdir)
    ok = all(num(r, "rel_linf") <= 1e-2 for r in rows)
    ok &= all(int(r["picard_iterations"]) <= 60 and r["picard_monotone"] == "true" for r in rows)
    detail = ", ".join(f"f={r['f']}: {num(r, 'rel_linf'):.2e}" for r in rows)
    detail += f"; picard iters {max(int(r['picard_iterations']) for r in rows)}"
    assert record(4, ok, detail + " (tol 1e-2)")


def test_c05_source_roundtrip(outdir):
    rows = sweep("c05_source_roundtrip", outdir)
    assert {r["f"] for r in rows} == {"one", "t", "sin"}
    ok = all(num(r, "rel_l2") <= 0.02 and int(r["floor_index"]) == -1 for r in rows)
    detail = ", ".join(f"f={r['f']}: {num(r, 'rel_l2'):.2e}" for r in rows)
    assert record(5, ok, detail + " (tol 0.02)")


def test_c06_potential_roundtrip(outdir, dirichlet_basis):
    rows = sweep("c06_potential_roundtrip", outdir)
    ok = all(num(r, "rel_l2") <= 0.05 for r in rows)
    ok &= all(int(r["floor_index"]) == int(r["floor_expected"]) > 0 for r in rows)
    # constructed degenerate source instance: R(x0, t) crosses zero
    b = dirichlet_basis
    g = TimeGrid(1.0, 1024, 0.5)
    R = (b.phis[0], lambda t: 1 - t / 0.6)
    Rx0 = b.at(0.5)[0] * (1 - g.nodes / 0.6)
    first = int(np.flatnonzero(np.abs(Rx0) < 0.1)[0])
    prob = SourceProblem(b.mesh, b.boundary, 1.0, 0.5, R=R)
    try:
        reconstruct_source_f(Trace(g, g.nodes), prob, b, ReconstructionConfig(delta=0.1, x0=0.5))
        hit = None
    except FloorViolation as exc:
        hit = exc.index
    ok &= hit == first
    detail = ", ".join(f"f={r['f']}: {num(r, 'rel_l2'):.2e} (floor {r['floor_index']}/{r['floor_expected']})"
                       for r in rows)
    assert record(6, ok, detail + f"; crossing floor {hit}/{first} (tol 0.05)")


def test_c07_stability(outdir):
    rows = {r["kind"]: r for r in sweep("c07_stability", outdir)}
    vals = {k: {c: num(r, c) for c in ("max_ratio", "max_ratio_fine", "max_reciprocal", "max_reciprocal_fine")}
            for k, r in rows.items()}
    ok = True
    for k, v in vals.items():
        finite = all(math.isfinite(x) and x > 0 for x in v.values())
        change = max(v["max_ratio"], v["max_ratio_fine"]) / min(v["max_ratio"], v["max_ratio_fine"])
        ok &= finite and change <= 2.0
    if BASELINE.exists():
        base = json.loads(BASELINE.read_text())
        same = all(np.isclose(vals[k][c], base[k][c], rtol=1e-6) for k in base for c in base[k])
        note = "baseline matched" if same else "baseline MISMATCH"
        ok &= same
    else:
        if ok:
            BASELINE.parent.mkdir(parents=True, exist_ok=True)
            BASELINE.write_text(json.dumps(vals, indent=2, sort_keys=True) + "\n")
        note = "baseline recorded"
    detail = ", ".join(f"{k}: {v['max_ratio']:.3g}->{v['max_ratio_fine']:.3g}, recip {v['max_reciprocal']:.3g}"
                       for k, v in vals.items())
    assert record(7, ok, f"{detail}; {note}")


def test_c08_gronwall(outdir):
    rows = {r["case"]: r for r in sweep("c08_gronwall", outdir)}
    ok = all(int(rows[c]["instances"]) == 500 and int(rows[c]["violations"]) == 0
             and int(rows[c]["hypothesis_failures"]) == 0 for c in ("weak", "lp", "ml"))
    gap = abs(num(rows["ml_equality"], "worst_margin"))
    ok &= gap <= 1e-6
    assert record(8, ok, f"0 violations in 3x500 instances: {ok}; equality gap {gap:.1e} (tol 1e-6)")


def test_c09_noise(outdir):
    (row,) = sweep("c09_noise", outdir)
    slope = num(row, "slope")
    parts = [float(x) for x in row["noise_part"].split()]
    part_slope = float(np.polyfit(np.log([1e-4, 1e-3, 1e-2]), np.log(parts), 1)[0])
    ok = slope <= 1.15
    assert record(9, ok, f"error slope {slope:.3f}, noise-part slope {part_slope:.3f} (tol <= 1.15)")


def test_c10_determinism(outdir):
    cfg = parse_config(CONFIGS / "c10_determinism.ini")
    a = run(cfg, outdir / "c10a").read_bytes()
    b = run(cfg, outdir / "c10b").read_bytes()
    rows = read_sweep(outdir / "c10a" / "sweep.csv")
    ok = a == b and all(r["status"] == "ok" for r in rows) and len(rows) == len(cfg.points())
    assert record(10, ok, f"{len(rows)} rows, byte-identical: {a == b}")
