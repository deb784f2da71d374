"""Named test functions for experiment configs.

A config refers to a generator by a spec string ``"name key=value ..."``,
for example ``"bump c=0.3 rate=1"``.  Every generator is a plain function
returning either a callable or a nodal array, so the provenance of each
test function stays in this file.
"""

from __future__ import annotations

import math
import shlex
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GenSpec:
    name: str
    params: tuple

    @property
    def kwargs(self) -> dict:
        return dict(self.params)

    def __str__(self):
        return " ".join([self.name, *(f"{k}={v:g}" for k, v in self.params)])


def parse_spec(text: str) -> GenSpec:
    parts = shlex.split(str(text))
    if not parts:
        raise ValueError("empty generator spec")
    params = []
    for item in parts[1:]:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise ValueError(f"bad generator parameter {item!r} (expected key=value)")
        params.append((key, float(val)))
    return GenSpec(parts[0], tuple(sorted(params)))


# --------------------------------------------------------------------------
# context handed to generators that need the mesh, the horizon or the basis


@dataclass(frozen=True)
class GenContext:
    L: float
    T: float
    basis: object = None

    def mode(self, n: int) -> np.ndarray:
        if self.basis is None:
            raise ValueError("this generator needs the eigenbasis")
        if not 1 <= n <= self.basis.n_modes:
            raise ValueError(f"mode {n} outside 1..{self.basis.n_modes}")
        return self.basis.phis[n - 1].copy()


# coefficient a(x)
def _a_const(ctx, value=1.0):
    return lambda x: np.full_like(np.asarray(x, dtype=float), value)


def _a_linear(ctx, a0=1.0, a1=0.5):
    return lambda x: a0 + a1 * np.asarray(x, dtype=float) / ctx.L


def _a_exp(ctx, k=0.5):
    return lambda x: np.exp(k * np.asarray(x, dtype=float) / ctx.L)


# spatial profiles (R, v0): eigenfunctions are compatible with every boundary
def _mode(ctx, n=1, scale=1.0):
    return scale * ctx.mode(int(n))


def _mode_decay(ctx, n=1, rate=1.0):
    phi = ctx.mode(int(n))
    return (phi, lambda t: np.exp(-rate * np.asarray(t, dtype=float)))


def _crossing(ctx, n=1, tc=0.5):
    """``phi_n(x) (1 - t / tc)``: its value at any interior point crosses zero at ``tc``."""
    phi = ctx.mode(int(n))
    return (phi, lambda t: 1.0 - np.asarray(t, dtype=float) / tc)


# potentials q(x, t)
def _q_const(ctx, value=1.0):
    return lambda x, t: np.full(np.broadcast(np.asarray(x), np.asarray(t)).shape, float(value))


def _q_bump(ctx, c=0.3, rate=1.0):
    L = ctx.L

    def q(x, t):
        x = np.asarray(x, dtype=float) / L
        return 1.0 + c * x * (1.0 - x) * np.exp(-rate * np.asarray(t, dtype=float))

    return q


# time factors f(t)
def _f_const(ctx, value=1.0):
    return lambda t: np.full_like(np.asarray(t, dtype=float), value)


def _f_one(ctx):
    return _f_const(ctx, 1.0)


def _f_zero(ctx):
    return _f_const(ctx, 0.0)


def _f_t(ctx):
    return lambda t: np.asarray(t, dtype=float).copy()


def _f_sin(ctx, k=1.0):
    T = ctx.T
    return lambda t: np.sin(2.0 * math.pi * k * np.asarray(t, dtype=float) / T)


def _f_linear(ctx, s=0.5):
    T = ctx.T
    return lambda t: 1.0 + s * np.asarray(t, dtype=float) / T


def _f_step(ctx, at=0.5, width=0.05):
    """Smoothed unit step at ``at * T`` with transition width ``width * T``."""
    T = ctx.T
    return lambda t: 0.5 * (1.0 + np.tanh((np.asarray(t, dtype=float) / T - at) / width))


REGISTRY = {
    "a": {"const": _a_const, "linear": _a_linear, "exp": _a_exp},
    "R": {"phi1": lambda ctx, scale=1.0: _mode(ctx, 1, scale), "mode": _mode, "mode_decay": _mode_decay,
          "crossing": _crossing},
    "v0": {"phi1": lambda ctx, scale=1.0: _mode(ctx, 1, scale), "mode": _mode},
    "q": {"const": _q_const, "bump": _q_bump},
    "f": {"one": _f_one, "zero": _f_zero, "const": _f_const, "t": _f_t, "sin": _f_sin,
          "linear": _f_linear, "step": _f_step},
}


def known(kind: str, spec: GenSpec) -> bool:
    return spec.name in REGISTRY.get(kind, {})


def build(kind: str, spec: GenSpec | str, ctx: GenContext):
    if isinstance(spec, str):
        spec = parse_spec(spec)
    table = REGISTRY[kind]
    if spec.name not in table:
        raise KeyError(f"unknown {kind} generator {spec.name!r}; choose from {sorted(table)}")
    kw = spec.kwargs
    if "n" in kw:
        kw["n"] = int(kw["n"])
    return table[spec.name](ctx, **kw)
