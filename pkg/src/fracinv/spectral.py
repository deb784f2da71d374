"""Spectral engine for ``A = -(a u')' + u`` on ``(0, L)``.

The operator is discretised by finite volumes on a uniform nodal grid.
With ``S`` the symmetric stiffness matrix (coefficient sampled at cell
midpoints) and ``W`` the diagonal of control-volume lengths, the discrete
elliptic part is ``W^{-1} S``.  Eigenpairs come from the symmetric
tridiagonal matrix ``M = W^{-1/2} S W^{-1/2} + I``; eigenvectors are
mapped back by ``phi = W^{-1/2} psi``, which makes them orthonormal in the
``W``-weighted inner product (the trapezoid rule on the grid).

Boundary condition ``(1 - sigma) u + sigma a u' nu = 0`` at each end:
``sigma = 0`` removes the boundary unknown, ``sigma > 0`` adds
``(1 - sigma) / sigma`` to the half-cell stiffness diagonal.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import mlf
from .fracops import TimeGrid

#: spectral-tail level above which solvers warn
TAIL_WARN = 1e-6


class EllipticityError(ValueError):
    """The diffusion coefficient is not bounded away from zero."""


class SpectralTailWarning(UserWarning):
    """An input is poorly represented by the truncated eigenbasis."""


@dataclass(frozen=True)
class SpatialMesh:
    L: float
    n_cells: int

    def __post_init__(self):
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"L must be positive, got {self.L}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 4:
            raise ValueError(f"n_cells must be an integer >= 4, got {self.n_cells}")
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def h(self) -> float:
        return self.L / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.L, self.n_cells + 1)

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.h

    def locate(self, x0: float) -> tuple[int, float]:
        """Cell index ``j`` and weight ``theta`` with ``x0 = (1-theta) x_j + theta x_{j+1}``."""
        x0 = float(x0)
        if not (0.0 <= x0 <= self.L):
            raise ValueError(f"x0 = {x0} lies outside [0, {self.L}]")
        s = x0 / self.h
        j = min(int(math.floor(s)), self.n_cells - 1)
        theta = s - j
        if abs(theta - 1.0) < 1e-12:
            j, theta = j + 1, 0.0
            if j == self.n_cells:
                j, theta = self.n_cells - 1, 1.0
        elif abs(theta) < 1e-12:
            theta = 0.0
        return j, theta

    def interp_weights(self, x0: float) -> np.ndarray:
        """Nodal vector ``w`` with ``w @ u`` the linear interpolant of ``u`` at ``x0``."""
        j, theta = self.locate(x0)
        w = np.zeros(self.n_cells + 1)
        w[j] += 1.0 - theta
        w[j + 1] += theta
        return w


@dataclass(frozen=True)
class BoundarySpec:
    sigma_left: float = 0.0
    sigma_right: float = 0.0

    def __post_init__(self):
        for name in ("sigma_left", "sigma_right"):
            s = getattr(self, name)
            if not (0.0 <= s <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {s}")

    @property
    def kappa(self) -> tuple[float, float]:
        """Robin coefficients ``(1 - sigma) / sigma`` (``inf`` for Dirichlet)."""
        return tuple(math.inf if s == 0 else (1.0 - s) / s for s in (self.sigma_left, self.sigma_right))


def _coef_values(a, x):
    if callable(a):
        v = np.asarray(a(x), dtype=float)
        return np.broadcast_to(v, np.shape(x)).astype(float)
    return np.full(np.shape(x), float(a))


@dataclass(frozen=True, eq=False)
class TridiagOperator:
    """Discrete ``A = W^{-1} S + I`` on the free nodes.

    ``stiff_diag``/``stiff_off`` hold ``S``; ``weights`` holds ``W``; ``free``
    maps unknowns to mesh nodes.  ``diag``/``off`` are the symmetrised
    ``M = W^{-1/2} S W^{-1/2} + I``.
    """

    mesh: SpatialMesh
    boundary: BoundarySpec
    a_mid: np.ndarray = field(repr=False)
    free: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    stiff_diag: np.ndarray = field(repr=False)
    stiff_off: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.free.size

    @property
    def diag(self) -> np.ndarray:
        return self.stiff_diag / self.weights + 1.0

    @property
    def off(self) -> np.ndarray:
        return self.stiff_off / np.sqrt(self.weights[:-1] * self.weights[1:])

    def dense(self) -> np.ndarray:
        """Dense symmetric ``M``."""
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def dense_elliptic(self) -> np.ndarray:
        """Dense (non-symmetric when ``W`` varies) ``W^{-1} S``."""
        S = np.diag(self.stiff_diag) + np.diag(self.stiff_off, 1) + np.diag(self.stiff_off, -1)
        return S / self.weights[:, None]

    def apply_elliptic(self, u_nodes: np.ndarray) -> np.ndarray:
        """``W^{-1} S u`` on the full node set (zero at eliminated nodes)."""
        u = np.asarray(u_nodes, dtype=float)
        uf = u[self.free] if u.ndim == 1 else u[self.free, :]
        su = self.stiff_diag.reshape((-1,) + (1,) * (uf.ndim - 1)) * uf
        off = self.stiff_off.reshape((-1,) + (1,) * (uf.ndim - 1))
        su[:-1] += off * uf[1:]
        su[1:] += off * uf[:-1]
        out = np.zeros(u.shape)
        out[self.free] = su / self.weights.reshape((-1,) + (1,) * (uf.ndim - 1))
        return out

    def boundary_residual(self, u_nodes: np.ndarray) -> tuple[float, float]:
        """Discrete ``(1 - sigma) u + sigma a u' nu`` at ``x = 0`` and ``x = L``.

        The flux uses a one-sided second-order difference.
        """
        u = np.asarray(u_nodes, dtype=float)
        h = self.mesh.h
        a0 = float(self._a_end(0))
        aL = float(self._a_end(1))
        du0 = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h)
        duL = (3.0 * u[-1] - 4.0 * u[-2] + u[-3]) / (2.0 * h)
        sl, sr = self.boundary.sigma_left, self.boundary.sigma_right
        return ((1 - sl) * u[0] - sl * a0 * du0, (1 - sr) * u[-1] + sr * aL * duL)

    def _a_end(self, side):
        # linear extrapolation of the midpoint samples
        am = self.a_mid
        return 1.5 * am[0] - 0.5 * am[1] if side == 0 else 1.5 * am[-1] - 0.5 * am[-2]


def assemble_operator(mesh: SpatialMesh, a, boundary: BoundarySpec) -> TridiagOperator:
    """Finite-volume discretisation of ``A = -(a u')' + u`` with ``B_sigma`` ends."""
    a_mid = _coef_values(a, mesh.midpoints)
    a_nodes = _coef_values(a, mesh.nodes)
    amin = min(float(np.min(a_mid)), float(np.min(a_nodes)))
    if not (amin > 0.0) or not np.all(np.isfinite(a_mid)):
        raise EllipticityError(f"diffusion coefficient must be positive, min a = {amin}")
    h = mesh.h
    n = mesh.n_cells
    flux = a_mid / h
    sd = np.zeros(n + 1)
    sd[:-1] += flux
    sd[1:] += flux
    so = -flux.copy()
    w = np.full(n + 1, h)
    w[0] = w[-1] = h / 2
    kl, kr = boundary.kappa
    keep = np.ones(n + 1, dtype=bool)
    if math.isinf(kl):
        keep[0] = False
    else:
        sd[0] += kl
    if math.isinf(kr):
        keep[-1] = False
    else:
        sd[-1] += kr
    free = np.flatnonzero(keep)
    lo, hi = free[0], free[-1]
    return TridiagOperator(
        mesh=mesh,
        boundary=boundary,
        a_mid=a_mid,
        free=free,
        weights=w[lo : hi + 1].copy(),
        stiff_diag=sd[lo : hi + 1].copy(),
        stiff_off=so[lo:hi].copy(),
    )


# --------------------------------------------------------------------------


class EigenSolverError(RuntimeError):
    """The tridiagonal eigensolver did not return usable eigenpairs."""


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """Lowest eigenpairs of ``A``; ``phis[n]`` is a nodal vector on the full mesh."""

    op: TridiagOperator
    lambdas: np.ndarray = field(repr=False)
    phis: np.ndarray = field(repr=False)

    @property
    def mesh(self) -> SpatialMesh:
        return self.op.mesh

    @property
    def boundary(self) -> BoundarySpec:
        return self.op.boundary

    @property
    def n_modes(self) -> int:
        return self.lambdas.size

    @property
    def elliptic_lambdas(self) -> np.ndarray:
        """Eigenvalues of the unshifted operator, ``lambda_n - 1`` (clipped at 0)."""
        return np.maximum(self.lambdas - 1.0, 0.0)

    @property
    def node_weights(self) -> np.ndarray:
        w = np.zeros(self.mesh.n_cells + 1)
        w[self.op.free] = self.op.weights
        return w

    def inner(self, u, v) -> float:
        return float(np.sum(self.node_weights * np.asarray(u) * np.asarray(v)))

    def norm(self, u) -> float:
        return math.sqrt(max(self.inner(u, u), 0.0))

    def at(self, x0: float) -> np.ndarray:
        """``phi_n(x0)`` for every mode (piecewise-linear interpolation)."""
        return self.phis @ self.mesh.interp_weights(x0)


def eigenbasis(op: TridiagOperator, n_modes: int | None = None) -> EigenBasis:
    """Lowest ``n_modes`` eigenpairs of ``A`` (default ``min(64, dim - 2)``)."""
    dim = op.dim
    if n_modes is None:
        n_modes = min(64, dim - 2)
    n_modes = int(n_modes)
    if not (1 <= n_modes <= dim):
        raise ValueError(f"n_modes must lie in [1, {dim}], got {n_modes}")
    try:
        lam, psi = eigh_tridiagonal(op.diag, op.off, select="i", select_range=(0, n_modes - 1))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise EigenSolverError(str(exc)) from exc
    if lam.size != n_modes or not np.all(np.isfinite(lam)):
        raise EigenSolverError("eigensolver returned an incomplete spectrum")
    phi_free = psi / np.sqrt(op.weights)[:, None]
    # sign convention: largest-magnitude entry positive
    idx = np.argmax(np.abs(phi_free), axis=0)
    phi_free *= np.sign(phi_free[idx, np.arange(n_modes)])
    phis = np.zeros((n_modes, op.mesh.n_cells + 1))
    phis[:, op.free] = phi_free.T
    lam = np.asarray(lam, dtype=float)
    lam.setflags(write=False)
    phis.setflags(write=False)
    return EigenBasis(op=op, lambdas=lam, phis=phis)


def eigen_residuals(basis: EigenBasis) -> np.ndarray:
    """``||M psi_n - lambda_n psi_n|| / lambda_n`` for every mode."""
    op = basis.op
    psi = basis.phis[:, op.free] * np.sqrt(op.weights)[None, :]
    Mpsi = psi * op.diag[None, :]
    Mpsi[:, :-1] += psi[:, 1:] * op.off[None, :]
    Mpsi[:, 1:] += psi[:, :-1] * op.off[None, :]
    res = Mpsi - basis.lambdas[:, None] * psi
    return np.linalg.norm(res, axis=1) / basis.lambdas


def orthonormality_defect(basis: EigenBasis) -> float:
    w = basis.node_weights
    G = (basis.phis * w[None, :]) @ basis.phis.T
    return float(np.max(np.abs(G - np.eye(basis.n_modes))))


# --------------------------------------------------------------------------
# modal operations


def project(values, basis: EigenBasis) -> np.ndarray:
    """Weighted inner products ``(h, phi_n)``; ``values`` may carry a trailing time axis."""
    v = np.asarray(values, dtype=float)
    w = basis.node_weights
    if v.ndim == 1:
        return basis.phis @ (w * v)
    return basis.phis @ (w[:, None] * v)


def spectral_tail(values, basis: EigenBasis) -> float:
    """``||h - P_N h|| / ||h||`` (0 for the zero vector); max over a trailing axis."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    w = basis.node_weights
    c = project(v, basis)
    total = np.sum(w[:, None] * v**2, axis=0)
    kept = np.sum(c**2, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        tail = np.sqrt(np.maximum(total - kept, 0.0) / total)
    tail = np.where(total > 0, tail, 0.0)
    return float(np.max(tail)) if tail.size else 0.0


def warn_tail(tail: float, what: str):
    if tail > TAIL_WARN:
        warnings.warn(
            f"{what}: spectral tail {tail:.3e} exceeds {TAIL_WARN:g}; increase n_modes",
            SpectralTailWarning,
            stacklevel=3,
        )


def apply_frac_power(basis: EigenBasis, gamma: float, coeffs) -> np.ndarray:
    """Coefficient-wise multiplication by ``lambda_n ** gamma``."""
    c = np.asarray(coeffs, dtype=float)
    scale = basis.lambdas ** float(gamma)
    return c * scale.reshape((-1,) + (1,) * (c.ndim - 1))


def duhamel_kernel_apply(basis: EigenBasis, gamma: float, t: float, coeffs, *, alpha: float) -> np.ndarray:
    """Modal action ``c_n -> lambda_n**gamma K_{lambda_n}(t) c_n``.

    ``K_lam(t) = t**(alpha-1) E_{alpha,alpha}(-lam t**alpha)``; up to sign this
    is ``A^{gamma-1} S_A'(t)``.
    """
    t = float(t)
    if not t > 0:
        raise ValueError("the Duhamel kernel is singular at t = 0; need t > 0")
    mult = basis.lambdas ** float(gamma) * mlf.ml_kernel(alpha, basis.lambdas, t)
    c = np.asarray(coeffs, dtype=float)
    return c * mult.reshape((-1,) + (1,) * (c.ndim - 1))


def smoothing_norm(basis: EigenBasis, gamma: float, t, *, alpha: float) -> np.ndarray:
    """Operator norm ``max_n lambda_n**gamma K_{lambda_n}(t)`` for each ``t``."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t <= 0):
        raise ValueError("need t > 0")
    lam = basis.lambdas
    K = mlf.ml_kernel(alpha, lam[:, None], t[None, :])
    return np.max(lam[:, None] ** float(gamma) * K, axis=0)


def synthesize(coeffs, basis: EigenBasis, x0: float | None = None):
    """``sum_n c_n phi_n`` at ``x0`` (interpolated) or on all nodes when ``x0`` is None."""
    c = np.asarray(coeffs, dtype=float)
    if x0 is None:
        return np.tensordot(basis.phis, c, axes=(0, 0))
    at = basis.at(x0)
    return np.tensordot(at, c, axes=(0, 0))


# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Field:
    """Space-time array ``values[j, k] = u(x_j, t_k)`` with optional modal coefficients."""

    mesh: SpatialMesh
    grid: TimeGrid
    values: np.ndarray = field(repr=False)
    coeffs: np.ndarray | None = field(default=None, repr=False)
    basis: EigenBasis | None = field(default=None, repr=False)

    def __post_init__(self):
        shape = (self.mesh.n_cells + 1, self.grid.n_steps + 1)
        if self.values.shape != shape:
            raise ValueError(f"field shape {self.values.shape} != {shape}")
        if self.coeffs is not None:
            if self.basis is None:
                raise ValueError("modal coefficients need their basis")
            if self.coeffs.shape != (self.basis.n_modes, shape[1]):
                raise ValueError("modal coefficient shape mismatch")

    def synthesis_defect(self) -> float:
        if self.coeffs is None:
            return 0.0
        return float(np.max(np.abs(synthesize(self.coeffs, self.basis) - self.values)))
