"""Discrete fractional calculus on a uniform time grid.

The Caputo derivative uses the L1 scheme (piecewise-linear data, kernel
integrated exactly).  The Riemann-Liouville integral and the weakly
singular convolution ``int_0^t (t-s)**(mu-1) w(s) ds`` use product
integration with the same piecewise-linear model of ``w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels


@dataclass(frozen=True)
class TimeGrid:
    """Uniform partition ``t_k = k * T / n_steps`` of ``[0, T]``."""

    T: float
    n_steps: int
    alpha: float

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive, got {self.T}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 2:
            raise ValueError(f"n_steps must be an integer >= 2, got {self.n_steps}")
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def __len__(self):
        return self.n_steps + 1

    def refine(self, factor: int) -> "TimeGrid":
        return TimeGrid(self.T, self.n_steps * int(factor), self.alpha)


@dataclass(frozen=True, eq=False)
class Trace:
    """Values of a scalar function at the nodes of a :class:`TimeGrid`."""

    grid: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 1 or v.size != len(self.grid):
            raise ValueError(f"trace length {v.size} does not match grid ({len(self.grid)} nodes)")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: TimeGrid, func) -> "Trace":
        t = grid.nodes
        return cls(grid, np.broadcast_to(np.asarray(func(t), dtype=float), t.shape))

    @property
    def t(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values) -> "Trace":
        return Trace(self.grid, values)

    def restrict(self, coarse: TimeGrid) -> "Trace":
        """Sample at the nodes of a coarser grid that divides this one."""
        ratio = self.grid.n_steps // coarse.n_steps
        if ratio * coarse.n_steps != self.grid.n_steps or coarse.T != self.grid.T:
            raise ValueError("coarse grid must divide the fine grid")
        return Trace(coarse, self.values[::ratio])

    def __len__(self):
        return self.values.size

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, other):
        return self.with_values(self.values * _vals(other))

    __rmul__ = __mul__


def _vals(x):
    return x.values if isinstance(x, Trace) else x


# --------------------------------------------------------------------------
# weights


def l1_weights(n: int, alpha: float) -> np.ndarray:
    """``b_j = (j+1)**(1-alpha) - j**(1-alpha)`` for ``j = 0..n-1``."""
    p = 1.0 - alpha
    j = np.arange(n, dtype=float)
    b = np.empty(n)
    b[0] = 1.0
    jj = j[1:]
    # cancellation-free form of the difference of powers
    b[1:] = jj**p * np.expm1(p * np.log1p(1.0 / jj))
    return b


def product_weights(n: int, mu: float) -> tuple[np.ndarray, np.ndarray]:
    """Product-integration weights for ``int_0^{t_k} (t_k - s)**(mu-1) w(s) ds``.

    Returns ``(a0, c)`` with ``a0[k]`` the weight of ``w_0`` at node ``k`` and
    ``c[m]`` the weight of ``w_{k-m}`` for ``1 <= k - m <= k``; both must be
    scaled by ``dt**mu / (mu * (mu + 1))``.  All weights are nonnegative.
    """
    p = mu + 1.0
    k = np.arange(n + 1, dtype=float)
    a0 = np.zeros(n + 1)
    a0[1:] = (k[1:] - 1.0) ** p - (k[1:] - 1.0 - mu) * k[1:] ** mu
    c = np.empty(n + 1)
    c[0] = 1.0
    if n >= 1:
        c[1] = 2.0**p - 2.0
    m = k[2:]
    # second difference of m**p written without catastrophic cancellation
    c[2:] = m**p * (np.expm1(p * np.log1p(1.0 / m)) + np.expm1(p * np.log1p(-1.0 / m)))
    return a0, c


# --------------------------------------------------------------------------
# operators


def caputo_l1(g: Trace, alpha: float | None = None) -> Trace:
    """L1 approximation of the Caputo derivative at every node (0 at ``t_0``)."""
    alpha = g.grid.alpha if alpha is None else float(alpha)
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    n = g.grid.n_steps
    dg = np.diff(g.values)
    b = l1_weights(n, alpha)
    out = np.zeros(n + 1)
    out[1:] = kernels.causal_convolve(b, dg)
    out *= g.grid.dt ** (-alpha) / math.gamma(2.0 - alpha)
    return g.with_values(out)


def _product_integral(mu: float, w: np.ndarray, dt: float) -> np.ndarray:
    n = w.size - 1
    a0, c = product_weights(n, mu)
    out = np.zeros(n + 1)
    if n:
        conv = kernels.causal_convolve(c, w[1:])
        out[1:] = a0[1:] * w[0] + conv
    return out * dt**mu / (mu * (mu + 1.0))


def singular_convolution(mu: float, w: Trace) -> Trace:
    """``int_0^{t_k} (t_k - s)**(mu-1) w(s) ds`` at every node, ``0 < mu < 1``."""
    mu = float(mu)
    if not (0.0 < mu < 1.0):
        raise ValueError(f"mu must lie in (0, 1), got {mu}")
    return w.with_values(_product_integral(mu, w.values, w.grid.dt))


def rl_integral(g: Trace, order: float) -> Trace:
    """Riemann-Liouville integral ``J^order g``; ``order = 1`` is the trapezoid rule."""
    order = float(order)
    if not (0.0 < order <= 1.0):
        raise ValueError(f"order must lie in (0, 1], got {order}")
    vals = _product_integral(order, g.values, g.grid.dt) / math.gamma(order)
    return g.with_values(vals)


def presmooth(g: Trace, half_width: int) -> Trace:
    """Centered moving average over ``2*half_width + 1`` nodes, mirrored at the ends."""
    half_width = int(half_width)
    if half_width < 0:
        raise ValueError("half_width must be nonnegative")
    if half_width == 0:
        return g
    if 2 * half_width >= g.grid.n_steps:
        raise ValueError("half_width must be below n_steps / 2")
    vals = ndimage.uniform_filter1d(g.values, 2 * half_width + 1, mode="mirror")
    return g.with_values(vals)


# --------------------------------------------------------------------------
# discrete norms


def lp_norm(g, p: float, dt: float | None = None, upto: int | None = None) -> float:
    """Discrete ``L^p(0, t_upto)`` norm (right-endpoint rule; ``p = inf`` is a max)."""
    if isinstance(g, Trace):
        dt = g.grid.dt if dt is None else dt
        v = g.values
    else:
        v = np.asarray(g, dtype=float)
        if dt is None:
            raise ValueError("dt is required for raw arrays")
    if upto is not None:
        v = v[: upto + 1]
    if math.isinf(p):
        return float(np.max(np.abs(v))) if v.size else 0.0
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((dt * np.sum(np.abs(v[1:]) ** p)) ** (1.0 / p))


def causal_product(f, g, dt: float) -> np.ndarray:
    """``dt * sum_{j=1}^{k} f_{k-j+1} g_j``, the rectangle-rule convolution of ``f`` and ``g``.

    Paired with :func:`lp_norm` it satisfies the discrete Young/Holder bound
    ``|f * g|(t_k) <= ||f||_{L^p(0,t_k)} ||g||_{L^q(0,t_k)}`` exactly.
    """
    f = np.asarray(_vals(f), dtype=float)
    g = np.asarray(_vals(g), dtype=float)
    out = np.zeros(f.size)
    out[1:] = dt * np.convolve(f[1:], g[1:])[: f.size - 1]
    return out


def relative_error(approx, exact, p: float = 2.0, dt: float | None = None) -> float:
    """``||approx - exact|| / ||exact||`` in the discrete ``L^p`` norm."""
    a, e = _vals(approx), _vals(exact)
    if dt is None:
        dt = exact.grid.dt if isinstance(exact, Trace) else 1.0
    num = lp_norm(np.asarray(a) - np.asarray(e), p, dt=dt)
    den = lp_norm(np.asarray(e), p, dt=dt)
    return num / den if den > 0 else num
