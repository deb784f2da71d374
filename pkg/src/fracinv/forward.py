"""Forward solvers for the source and potential problems.

Two independent discretisations are provided:

* spectral: project onto the eigenbasis of ``A`` and solve the modal
  Volterra equations ``u_n = K_n * F_n`` by product integration
  (piecewise-linear ``F``, kernel moments from Mittag-Leffler integrals);
* :func:`solve_l1`: implicit L1 time stepping on the nodal grid.

The spectral path uses the eigenvalues ``lambda_n - 1`` of the unshifted
operator, which is exact mode by mode.  The Picard maps built on ``A``
itself (``u = H(u) + H(F)`` and its potential-problem analogue) are
available through ``method="picard"`` and record their contraction
residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import kernels, mlf
from .fracops import TimeGrid, Trace, l1_weights
from .spectral import (
    BoundarySpec,
    EigenBasis,
    Field,
    SpatialMesh,
    TridiagOperator,
    assemble_operator,
    eigenbasis,
    project,
    spectral_tail,
    synthesize,
    warn_tail,
)

#: compatibility tolerances (source data, potential data)
COMPAT_TOL_SOURCE = 1e-8
COMPAT_TOL_POTENTIAL = 1e-6


class CompatibilityError(ValueError):
    """Problem data violate the boundary compatibility conditions."""


class PicardDivergence(RuntimeError):
    """A fixed-point iteration failed to converge; ``history`` holds its residuals."""

    def __init__(self, msg, history=None):
        super().__init__(msg)
        self.history = list(history or [])


class StepConvergenceError(RuntimeError):
    """The per-step implicit solve did not converge."""


# --------------------------------------------------------------------------
# space-time data


def _eval_x(obj, x):
    if callable(obj):
        return np.broadcast_to(np.asarray(obj(x), dtype=float), x.shape).copy()
    return np.asarray(obj, dtype=float)


def _eval_t(obj, t):
    if isinstance(obj, Trace):
        if obj.values.size != t.size:
            raise ValueError("time factor does not match the grid")
        return obj.values
    if callable(obj):
        return np.broadcast_to(np.asarray(obj(t), dtype=float), t.shape).copy()
    return np.broadcast_to(np.asarray(obj, dtype=float), t.shape)


def tabulate(data, mesh: SpatialMesh, grid: TimeGrid) -> np.ndarray:
    """Nodal table ``(n_nodes, n_times)`` of space-time data.

    ``data`` may be a callable ``g(x, t)`` (broadcasting), a separable pair
    ``(g_x, g_t)``, a constant, a nodal vector (time-independent) or a full table.
    """
    x = mesh.nodes
    t = grid.nodes
    shape = (x.size, t.size)
    if isinstance(data, tuple):
        gx, gt = data
        out = np.outer(_eval_x(gx, x), _eval_t(gt, t))
    elif callable(data):
        out = np.broadcast_to(np.asarray(data(x[:, None], t[None, :]), dtype=float), shape).copy()
    else:
        arr = np.asarray(data, dtype=float)
        if arr.ndim == 0:
            out = np.full(shape, float(arr))
        elif arr.shape == (x.size,):
            out = np.repeat(arr[:, None], t.size, axis=1)
        elif arr.shape == shape:
            out = arr.copy()
        else:
            raise ValueError(f"space-time data of shape {arr.shape} does not fit {shape}")
    if not np.all(np.isfinite(out)):
        raise ValueError("space-time data contain non-finite values")
    return out


def _flux_fd(func, x_end, side, a_end, t=None):
    """``a * g'`` at an endpoint: one-sided differences stepping by ``side``, Richardson-extrapolated."""

    def d(hh):
        xs = x_end + side * np.array([0.0, hh, 2 * hh])
        if t is None:
            v = np.asarray(func(xs), dtype=float)
        else:
            v = np.asarray(func(xs[:, None], t[None, :]), dtype=float)
            v = np.broadcast_to(v, (3, t.size))
        return side * (-3 * v[0] + 4 * v[1] - v[2]) / (2 * hh)

    h = 1e-3
    return a_end * (4.0 * d(h / 2) - d(h)) / 3.0


# --------------------------------------------------------------------------
# problems


@dataclass
class _Base:
    mesh: SpatialMesh
    boundary: BoundarySpec
    a: Any
    alpha: float

    def operator(self) -> TridiagOperator:
        return assemble_operator(self.mesh, self.a, self.boundary)

    def make_basis(self, n_modes: int | None = None) -> EigenBasis:
        return eigenbasis(self.operator(), n_modes)

    def _a_at(self, x):
        return float(np.asarray(self.a(np.array([x])) if callable(self.a) else self.a).ravel()[0])

    def _ends(self):
        return (
            (0.0, -1.0, self.boundary.sigma_left, self._a_at(0.0)),
            (self.mesh.L, 1.0, self.boundary.sigma_right, self._a_at(self.mesh.L)),
        )


@dataclass
class SourceProblem(_Base):
    """``D_t^alpha u + A_ell u = f(t) R(x, t)``, ``u(0) = 0``; ``f`` may be None for inversion."""

    f: Trace | None = None
    R: Any = None
    p: float = math.inf

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.R is None:
            raise ValueError("SourceProblem needs R")
        if self.f is not None and not np.all(np.isfinite(self.f.values)):
            raise ValueError("f must be finite")

    def with_f(self, f: Trace) -> "SourceProblem":
        return SourceProblem(self.mesh, self.boundary, self.a, self.alpha, f=f, R=self.R, p=self.p)

    def R_table(self, grid: TimeGrid) -> np.ndarray:
        return tabulate(self.R, self.mesh, grid)

    def check_compatibility(self, grid: TimeGrid, tol: float = COMPAT_TOL_SOURCE) -> dict:
        """Boundary condition ``B_sigma R(., t) = 0`` at both ends for every ``t``."""
        tab = self.R_table(grid)
        scale = max(1.0, float(np.max(np.abs(tab))))
        report = {}
        for (xe, nu, sig, a_end), col, name in zip(self._ends(), (0, -1), ("left", "right")):
            if sig == 0.0:
                defect = float(np.max(np.abs(tab[col])))
            elif isinstance(self.R, tuple) and callable(self.R[0]):
                gx, gt = self.R
                flux = _flux_fd(gx, xe, -nu, a_end)
                bc = (1 - sig) * _eval_x(gx, np.array([xe]))[0] + sig * nu * flux
                defect = float(np.max(np.abs(bc * _eval_t(gt, grid.nodes))))
            elif callable(self.R):
                flux = _flux_fd(self.R, xe, -nu, a_end, grid.nodes)
                defect = float(np.max(np.abs((1 - sig) * tab[col] + sig * nu * flux)))
            else:
                # tabulated data: the flux condition is the natural condition of the scheme
                defect = 0.0
            report[name] = defect
            if defect > tol * scale:
                raise CompatibilityError(f"R violates the {name} boundary condition (defect {defect:.3e})")
        return report


@dataclass
class PotentialProblem(_Base):
    """``D_t^alpha v + A_ell v + f(t) q(x, t) v = 0``, ``v(0) = v0``."""

    f: Trace | None = None
    q: Any = None
    v0: Any = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.q is None or self.v0 is None:
            raise ValueError("PotentialProblem needs q and v0")
        if self.f is not None and not np.all(np.isfinite(self.f.values)):
            raise ValueError("f must be finite")

    def with_f(self, f: Trace) -> "PotentialProblem":
        return PotentialProblem(self.mesh, self.boundary, self.a, self.alpha, f=f, q=self.q, v0=self.v0)

    def q_table(self, grid: TimeGrid) -> np.ndarray:
        return tabulate(self.q, self.mesh, grid)

    def v0_nodes(self) -> np.ndarray:
        v = _eval_x(self.v0, self.mesh.nodes)
        if v.shape != (self.mesh.n_cells + 1,):
            raise ValueError("v0 must be a nodal vector or a callable of x")
        return v

    def check_compatibility(self, grid: TimeGrid, tol: float = COMPAT_TOL_POTENTIAL) -> dict:
        """``B_sigma v0 = 0``, ``B_sigma(A_ell v0) = 0`` and ``a q' = 0`` at ends with ``sigma > 0``."""
        op = self.operator()
        v0 = self.v0_nodes()
        av0 = op.apply_elliptic(v0)
        report = {}
        sv = max(1.0, float(np.max(np.abs(v0))))
        sa = max(1.0, float(np.max(np.abs(av0))))
        qt = self.q_table(grid)
        sq = max(1.0, float(np.max(np.abs(qt))))
        for (xe, nu, sig, a_end), side, name in zip(self._ends(), (0, 1), ("left", "right")):
            idx = 0 if side == 0 else -1
            if sig == 0.0:
                d_v = abs(v0[idx])
                # A_ell v0 lives on interior nodes: extrapolate cubically to the end
                inner = av0[1:5] if side == 0 else av0[-2:-6:-1]
                d_a = abs(4 * inner[0] - 6 * inner[1] + 4 * inner[2] - inner[3])
                d_q = 0.0
            else:
                d_a = 0.0  # natural condition of the finite-volume scheme
                if callable(self.v0):
                    flux = float(_flux_fd(self.v0, xe, -nu, a_end))
                    d_v = abs((1 - sig) * v0[idx] + sig * nu * flux)
                else:
                    d_v = 0.0
                d_q = self._q_flux_defect(xe, nu, a_end, grid)
            report[name] = {"v0": d_v, "A_v0": d_a, "q_flux": d_q}
            if d_v > tol * sv:
                raise CompatibilityError(f"v0 violates the {name} boundary condition (defect {d_v:.3e})")
            if d_a > tol * sa:
                raise CompatibilityError(f"A v0 violates the {name} boundary condition (defect {d_a:.3e})")
            if d_q > tol * sq:
                raise CompatibilityError(f"a q' != 0 at the {name} end (defect {d_q:.3e})")
        return report

    def _q_flux_defect(self, xe, nu, a_end, grid):
        q = self.q
        if isinstance(q, tuple):
            gx, gt = q
            if not callable(gx):
                return 0.0
            flux = _flux_fd(gx, xe, -nu, a_end)
            return float(np.max(np.abs(flux * _eval_t(gt, grid.nodes))))
        if callable(q):
            return float(np.max(np.abs(_flux_fd(q, xe, -nu, a_end, grid.nodes))))
        return 0.0


# --------------------------------------------------------------------------
# product-integration weights for the modal Volterra equations


@dataclass(frozen=True, eq=False)
class ModalWeights:
    """Weights ``A[:, m]``, ``B[:, m]`` (``m = 1..n``) such that

    ``int_0^{t_k} K_lam(t_k - s) F(s) ds = sum_m A_m F_{k-m} + B_m F_{k-m+1}``

    for piecewise-linear ``F``; ``B[:, 1]`` multiplies the current value.
    """

    grid: TimeGrid
    lambdas: np.ndarray
    A: np.ndarray = field(repr=False)
    B: np.ndarray = field(repr=False)

    @property
    def current(self) -> np.ndarray:
        return self.B[:, 1]


_WEIGHT_CACHE: dict = {}


def modal_weights(grid: TimeGrid, lambdas) -> ModalWeights:
    lam = np.ascontiguousarray(np.asarray(lambdas, dtype=float))
    key = (grid.T, grid.n_steps, grid.alpha, lam.tobytes())
    hit = _WEIGHT_CACHE.get(key)
    if hit is not None:
        return hit
    t = grid.nodes
    K1 = mlf.ml_kernel_integral(grid.alpha, lam[:, None], t[None, :], order=1)
    K2 = mlf.ml_kernel_integral(grid.alpha, lam[:, None], t[None, :], order=2)
    D = np.zeros_like(K1)
    D[:, 1:] = np.diff(K2, axis=1) / grid.dt
    A = np.zeros_like(K1)
    B = np.zeros_like(K1)
    A[:, 1:] = K1[:, 1:] - D[:, 1:]
    B[:, 1:] = D[:, 1:] - K1[:, :-1]
    A.setflags(write=False)
    B.setflags(write=False)
    w = ModalWeights(grid=grid, lambdas=lam, A=A, B=B)
    if len(_WEIGHT_CACHE) > 32:
        _WEIGHT_CACHE.clear()
    _WEIGHT_CACHE[key] = w
    return w


# --------------------------------------------------------------------------
# reports


@dataclass
class SolveReport:
    field: Field
    picard_iterations: int = 0
    contraction_residuals: np.ndarray = field(default_factory=lambda: np.zeros(0))
    spectral_tail: float = 0.0
    info: dict = field(default_factory=dict)

    def summary(self) -> dict:
        res = self.contraction_residuals
        return {
            "picard_iterations": self.picard_iterations,
            "final_residual": float(res[-1]) if res.size else 0.0,
            "spectral_tail": self.spectral_tail,
            **{k: v for k, v in self.info.items() if np.isscalar(v)},
        }


def _field(mesh, grid, coeffs, basis, offset=None):
    vals = synthesize(coeffs, basis)
    if offset is not None:
        vals = vals + offset[:, None]
    return Field(mesh=mesh, grid=grid, values=vals, coeffs=coeffs, basis=basis)


def _picard(step: Callable[[np.ndarray], np.ndarray], start, tol, max_iter, what):
    cur = start
    history = []
    for it in range(1, max_iter + 1):
        nxt = step(cur)
        d = float(np.max(np.abs(nxt - cur)))
        history.append(d)
        cur = nxt
        if d <= tol * max(1.0, float(np.max(np.abs(cur)))):
            return cur, it, np.array(history)
    raise PicardDivergence(f"{what}: no convergence in {max_iter} iterations", history)


def _check_grid(prob, grid):
    if abs(grid.alpha - prob.alpha) > 0:
        raise ValueError(f"grid alpha {grid.alpha} differs from problem alpha {prob.alpha}")
    if prob.f is None:
        raise ValueError("the forward problem needs f")
    if prob.f.grid.n_steps != grid.n_steps or prob.f.grid.T != grid.T:
        raise ValueError("f is not sampled on the solver grid")


# --------------------------------------------------------------------------
# spectral solvers


def solve_source_spectral(
    prob: SourceProblem,
    grid: TimeGrid,
    basis: EigenBasis,
    *,
    method: str = "direct",
    tol: float = 1e-10,
    max_iter: int = 60,
    check: bool = True,
) -> SolveReport:
    """Modal Duhamel solution of the source problem.

    ``method="direct"`` convolves each mode with the kernel of eigenvalue
    ``lambda_n - 1``; ``method="picard"`` iterates ``u <- H(u) + H(F)`` with
    the kernels of ``A`` until the sup-norm update drops below ``tol``.
    """
    _check_grid(prob, grid)
    if check:
        prob.check_compatibility(grid)
    Rt = prob.R_table(grid)
    tail = spectral_tail(Rt, basis)
    warn_tail(tail, "source profile R")
    F = project(Rt, basis) * prob.f.values[None, :]
    if method == "direct":
        w = modal_weights(grid, basis.elliptic_lambdas)
        U = kernels.volterra_convolve(w.A, w.B, np.ascontiguousarray(F))
        iters, res = 0, np.zeros(0)
    elif method == "picard":
        w = modal_weights(grid, basis.lambdas)

        def step(u):
            return kernels.volterra_convolve(w.A, w.B, np.ascontiguousarray(u + F))

        U, iters, res = _picard(step, np.zeros_like(F), tol, max_iter, "source Picard map")
    else:
        raise ValueError(f"unknown method {method!r}")
    fld = _field(prob.mesh, grid, U, basis)
    return SolveReport(fld, iters, res, tail)


def solve_potential_spectral(
    prob: PotentialProblem,
    grid: TimeGrid,
    basis: EigenBasis,
    *,
    method: str = "direct",
    shift: str = "diagonal",
    tol: float = 1e-12,
    max_inner: int = 50,
    picard_tol: float = 1e-10,
    max_iter: int = 60,
    check: bool = True,
) -> SolveReport:
    """Solve the potential problem through ``v = w + v0``.

    ``w`` satisfies the modal Volterra system with right side
    ``G = -(A_ell + f q) v0 - f q w``.  ``method="direct"`` marches in time
    with a per-step fixed point for the implicit current value;
    ``method="picard"`` iterates the map ``w <- H((1 - p) w) + H(F)`` on the
    whole interval.

    With ``shift="diagonal"`` the direct method moves the time-averaged
    diagonal ``s_n`` of the Galerkin potential into the kernel (eigenvalue
    ``lambda_n - 1 + s_n``); only the remainder is interpolated, so a
    potential that is diagonal and constant in the basis is integrated
    exactly.  ``shift="none"`` keeps the plain kernels.
    """
    _check_grid(prob, grid)
    if check:
        prob.check_compatibility(grid)
    v0 = prob.v0_nodes()
    tail = spectral_tail(v0, basis)
    warn_tail(tail, "initial value v0")
    qt = prob.q_table(grid)
    f = prob.f.values
    nw = basis.node_weights
    Phi = basis.phis  # (modes, nodes)
    lt = basis.elliptic_lambdas
    c0 = project(v0, basis)
    n1 = grid.n_steps + 1

    if method == "direct":
        sh = diagonal_shift(basis, qt, f) if shift == "diagonal" else np.zeros(basis.n_modes)
        if shift not in ("diagonal", "none"):
            raise ValueError(f"unknown shift {shift!r}")
        mu = lt + sh
        w = modal_weights(grid, mu)
        A, B = w.A, w.B
        G = np.zeros((basis.n_modes, n1))
        W = np.zeros((basis.n_modes, n1))
        inner_counts = np.zeros(n1, dtype=int)
        inner_res = np.zeros(n1)
        # modal form: D w + (lt + sh) w = -lt c0 - P (w + c0) + sh w
        pv = f[0] * qt[:, 0] * v0
        G[:, 0] = -lt * c0 - Phi @ (nw * pv)
        for k in range(1, n1):
            H = kernels.volterra_history(A, B, G, k)
            wq = nw * f[k] * qt[:, k]
            base = -lt * c0 - Phi @ (wq * v0)
            wk = W[:, k - 1].copy()
            for it in range(1, max_inner + 1):
                gk = base - Phi @ (wq * (Phi.T @ wk)) + sh * wk
                new = H + B[:, 1] * gk
                d = float(np.max(np.abs(new - wk)))
                wk = new
                if d <= tol * max(1.0, float(np.max(np.abs(wk)))):
                    break
            else:
                raise StepConvergenceError(f"step {k}: inner fixed point stalled (update {d:.3e})")
            W[:, k] = wk
            G[:, k] = base - Phi @ (wq * (Phi.T @ wk)) + sh * wk
            inner_counts[k] = it
            inner_res[k] = d
        fld = _field(prob.mesh, grid, W + c0[:, None], basis, offset=v0 - Phi.T @ c0)
        return SolveReport(
            fld,
            int(inner_counts.max()),
            inner_res,
            tail,
            info={"inner_iterations_total": int(inner_counts.sum())},
        )
    if method == "picard":
        w = modal_weights(grid, basis.lambdas)
        p = f[None, :] * qt
        Fm = -lt[:, None] * c0[:, None] - Phi @ (nw[:, None] * p * v0[:, None])

        def step(wc):
            nodal = Phi.T @ wc
            rhs = wc - Phi @ (nw[:, None] * p * nodal) + Fm
            return kernels.volterra_convolve(w.A, w.B, np.ascontiguousarray(rhs))

        Wc, iters, res = _picard(step, np.zeros_like(Fm), picard_tol, max_iter, "potential Picard map")
        fld = _field(prob.mesh, grid, Wc + c0[:, None], basis, offset=v0 - Phi.T @ c0)
        return SolveReport(fld, iters, res, tail)
    raise ValueError(f"unknown method {method!r}")


def diagonal_shift(basis: EigenBasis, q_table: np.ndarray, f) -> np.ndarray:
    """Time average of ``f(t) (q(., t) phi_n, phi_n)`` for every mode."""
    diag = (basis.phis**2 * basis.node_weights[None, :]) @ q_table
    return np.mean(diag * np.asarray(f, dtype=float)[None, :], axis=1)


# --------------------------------------------------------------------------
# direct L1 time stepping


def solve_l1(prob, grid: TimeGrid, *, check: bool = True) -> Field:
    """Implicit L1 scheme on the nodal grid for either problem type.

    Each step solves ``(c0 W + S + W p_k) u_k = W (F_k + c0 * memory)`` with
    ``c0 = dt**-alpha / Gamma(2 - alpha)``; the matrix is SPD tridiagonal.
    """
    _check_grid(prob, grid)
    if check:
        prob.check_compatibility(grid)
    op = prob.operator()
    mesh = prob.mesh
    free = op.free
    nfree = free.size
    n1 = grid.n_steps + 1
    alpha = grid.alpha
    c0 = grid.dt ** (-alpha) / math.gamma(2.0 - alpha)
    b = l1_weights(grid.n_steps, alpha)
    f = prob.f.values
    if isinstance(prob, SourceProblem):
        src = prob.R_table(grid)[free] * f[None, :]
        pot = None
        u_prev = np.zeros(nfree)
    elif isinstance(prob, PotentialProblem):
        src = None
        pot = prob.q_table(grid)[free] * f[None, :]
        u_prev = prob.v0_nodes()[free].copy()
    else:
        raise TypeError("solve_l1 expects a SourceProblem or PotentialProblem")
    U = np.zeros((mesh.n_cells + 1, n1))
    U[free, 0] = u_prev
    dU = np.zeros((max(grid.n_steps, 1), nfree))
    Wt = op.weights
    lower = np.ascontiguousarray(op.stiff_off)
    for k in range(1, n1):
        mem = kernels.l1_history(b, dU, k)
        rhs = c0 * (u_prev - mem)
        diag = c0 * Wt + op.stiff_diag
        if src is not None:
            rhs = rhs + src[:, k]
        if pot is not None:
            diag = diag + Wt * pot[:, k]
        uk = kernels.tridiag_solve(lower, np.ascontiguousarray(diag), lower, np.ascontiguousarray(Wt * rhs))
        if not np.all(np.isfinite(uk)):
            raise np.linalg.LinAlgError(f"L1 step {k} produced non-finite values")
        dU[k - 1] = uk - u_prev
        U[free, k] = uk
        u_prev = uk
    return Field(mesh=mesh, grid=grid, values=U)


# --------------------------------------------------------------------------


def observe(fld: Field, x0: float) -> Trace:
    """``u(x0, t_k)`` by linear interpolation in space."""
    w = fld.mesh.interp_weights(x0)
    return Trace(fld.grid, w @ fld.values)


def relative_linf(a: Field | np.ndarray, b: Field | np.ndarray) -> float:
    """``max |a - b| / max |b|``."""
    va = a.values if isinstance(a, Field) else np.asarray(a)
    vb = b.values if isinstance(b, Field) else np.asarray(b)
    den = float(np.max(np.abs(vb)))
    num = float(np.max(np.abs(va - vb)))
    return num / den if den > 0 else num


def elliptic_at(fld: Field, x0: float, op: TridiagOperator | None = None) -> Trace:
    """``A_ell u(x0, t_k)``: modal when coefficients exist, else the nodal operator."""
    if fld.coeffs is not None:
        b = fld.basis
        return Trace(fld.grid, (b.at(x0) * b.elliptic_lambdas) @ fld.coeffs)
    if op is None:
        raise ValueError("a nodal field needs the operator")
    return Trace(fld.grid, fld.mesh.interp_weights(x0) @ op.apply_elliptic(fld.values))


def caputo_trace(fld: Field, prob, x0: float) -> Trace:
    """``D_t^alpha u(x0, .)`` read off the equation from a modal solution.

    Source: ``f R(x0) - A_ell u(x0)``.  Potential: ``-f q(x0) v(x0) - A_ell v(x0)``.
    This is the observation of the stability theorems, free of the L1
    start-up error that differencing ``u(x0, .)`` would add.
    """
    if fld.coeffs is None:
        raise ValueError("caputo_trace needs a modal field")
    if prob.f is None:
        raise ValueError("problem has no time factor f")
    grid = fld.grid
    iw = fld.mesh.interp_weights(x0)
    Au = elliptic_at(fld, x0).values
    fv = prob.f.values
    if isinstance(prob, SourceProblem):
        return Trace(grid, fv * (iw @ prob.R_table(grid)) - Au)
    qx = iw @ prob.q_table(grid)
    return Trace(grid, -fv * qx * (iw @ fld.values) - Au)


__all__ = [
    "CompatibilityError",
    "ModalWeights",
    "PicardDivergence",
    "PotentialProblem",
    "SolveReport",
    "SourceProblem",
    "StepConvergenceError",
    "caputo_trace",
    "elliptic_at",
    "modal_weights",
    "observe",
    "relative_linf",
    "solve_l1",
    "solve_potential_spectral",
    "solve_source_spectral",
    "tabulate",
]
