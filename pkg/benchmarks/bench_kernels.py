"""Compare the numba kernels with their numpy counterparts.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--e2e]

Kernel timings call the ``*_nb`` and ``*_np`` variants side by side in one
process (numba compile time is excluded by a warm-up call).  ``--e2e`` also
times a warm full source round trip (L1 forward solve plus reconstruction)
in two subprocesses, one with ``FRACINV_DISABLE_NUMBA=1``.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from fracinv import _accel, kernels, mlf
from fracinv.forward import modal_weights
from fracinv.fracops import TimeGrid, l1_weights


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    n = 2048
    modes = 64
    grid = TimeGrid(1.0, n, 0.5)
    w = modal_weights(grid, np.linspace(1.0, 4e4, modes))
    F = rng.standard_normal((modes, n + 1))
    c = rng.standard_normal(n)
    b = l1_weights(n, 0.5)
    dU = rng.standard_normal((n, 255))
    m = 4095
    diag = 4.0 + rng.uniform(0, 1, m)
    off = -np.ones(m - 1)
    rhs = rng.standard_normal(m)
    z = -np.linspace(0.0, 50.0, 20000)
    return {
        "causal_convolve (n=2048)": (lambda: kernels.causal_convolve_nb(c, c), lambda: kernels.causal_convolve_np(c, c)),
        "volterra_convolve (64 x 2048)": (
            lambda: kernels.volterra_convolve_nb(w.A, w.B, F),
            lambda: kernels.volterra_convolve_np(w.A, w.B, F),
        ),
        "volterra_history march (64 x 1024)": (
            lambda: [kernels.volterra_history_nb(w.A, w.B, F, k) for k in range(1, 1025)],
            lambda: [kernels.volterra_history_np(w.A, w.B, F, k) for k in range(1, 1025)],
        ),
        "l1_history x 64 steps": (
            lambda: [kernels.l1_history_nb(b, dU, k) for k in range(n - 64, n)],
            lambda: [kernels.l1_history_np(b, dU, k) for k in range(n - 64, n)],
        ),
        "tridiag_solve (4095)": (
            lambda: kernels.tridiag_solve_nb(off, diag, off, rhs),
            lambda: kernels.tridiag_solve_np(off, diag, off, rhs),
        ),
        "mittag_leffler (20000 pts)": (
            lambda: mlf._ml_array_nb(0.5, 1.0, z),
            lambda: mlf._ml_array_np(0.5, 1.0, z),
        ),
    }


E2E = """
import time, numpy as np
from fracinv.fracops import TimeGrid, Trace
from fracinv.spectral import SpatialMesh, BoundarySpec, assemble_operator, eigenbasis
from fracinv.forward import SourceProblem, solve_l1, observe
from fracinv.inverse import ReconstructionConfig, reconstruct_source_f
mesh = SpatialMesh(1.0, 256); bd = BoundarySpec(0.0, 0.0)
basis = eigenbasis(assemble_operator(mesh, 1.0, bd), 64)
g = TimeGrid(1.0, 1024, 0.5)
def once():
    prob = SourceProblem(mesh, bd, 1.0, 0.5, f=Trace.from_function(g, lambda t: np.sin(2*np.pi*t)), R=basis.phis[0])
    data = observe(solve_l1(prob, g), 0.5)
    reconstruct_source_f(data, prob, basis, ReconstructionConfig(delta=0.1, x0=0.5))
once()  # warm-up: loads cached numba code and the modal-weight cache
t0 = time.perf_counter()
once()
print(time.perf_counter() - t0)
"""


def e2e(disable: bool) -> float:
    env = dict(os.environ)
    env.pop("FRACINV_DISABLE_NUMBA", None)
    if disable:
        env["FRACINV_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--e2e", action="store_true", help="also time a full round trip per backend")
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba unavailable: both columns time the numpy path")
    print(f"{'kernel':32s} {'numba [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>9s}")
    for name, (nb, npf) in cases().items():
        t_nb = best_of(nb, args.repeat)
        t_np = best_of(npf, args.repeat)
        print(f"{name:32s} {1e3 * t_nb:12.3f} {1e3 * t_np:12.3f} {t_np / t_nb:9.2f}")
    if args.e2e:
        a = e2e(False)
        b = e2e(True)
        print(f"{'source round trip (1024 steps)':32s} {1e3 * a:12.1f} {1e3 * b:12.1f} {b / a:9.2f}")


if __name__ == "__main__":
    main()
