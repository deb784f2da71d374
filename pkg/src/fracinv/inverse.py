"""Recovery of the time factor ``f`` from a single-point trace.

Source problem: ``f(t) R(x0, t) = D_t^alpha u(x0, t) + A_ell u(x0, t)``.
Potential problem: ``f(t) q(x0, t) v(x0, t) = -D_t^alpha v(x0, t) - A_ell v(x0, t)``.

Both are marched in time.  ``A_ell u(x0, t_k)`` is written through the
modal Volterra history driven by the already reconstructed values plus
the current-value weight, which turns each step into a scalar equation
for ``f(t_k)``.  The module also carries numerical verifiers for the
Gronwall-type inequalities behind the stability estimates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels, mlf
from .forward import (
    PotentialProblem,
    SourceProblem,
    diagonal_shift,
    modal_weights,
)
from .fracops import (
    TimeGrid,
    Trace,
    caputo_l1,
    lp_norm,
    presmooth,
    product_weights,
    singular_convolution,
)
from .spectral import EigenBasis, project, spectral_tail, warn_tail

#: scalar step coefficients below this are treated as degenerate
DEGENERATE = 1e-14


class FloorViolation(ArithmeticError):
    """The observation floor ``|denominator| >= delta`` fails at ``index``."""

    def __init__(self, msg, index: int, time: float, value: float):
        super().__init__(msg)
        self.index = index
        self.time = time
        self.value = value


class IllPosedStep(ArithmeticError):
    """A reconstruction step has a vanishing scalar coefficient."""


class InnerIterationError(RuntimeError):
    """The per-step nonlinear solve of the potential reconstruction failed."""


@dataclass(frozen=True)
class ReconstructionConfig:
    delta: float
    x0: float
    gamma: float = 0.5
    presmooth_half_width: int = 0
    max_inner_iters: int = 50
    inner_tol: float = 1e-10
    data_is_caputo: bool = False
    allow_lagging: bool = True
    M: float | None = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not (0.25 < self.gamma < 1.0):
            raise ValueError(f"gamma must lie in (0.25, 1), got {self.gamma}")
        if self.presmooth_half_width < 0:
            raise ValueError("presmooth_half_width must be nonnegative")
        if self.max_inner_iters < 1 or not self.inner_tol > 0:
            raise ValueError("inner iteration settings must be positive")

    def mu_for(self, alpha: float) -> float:
        return alpha * (1.0 - self.gamma)


@dataclass
class ReconstructionResult:
    f_hat: Trace
    residual_trace: Trace
    floor_margin: float
    diagnostics: dict = field(default_factory=dict)
    coeffs: np.ndarray | None = field(default=None, repr=False)


def _caputo_data(data: Trace, cfg: ReconstructionConfig) -> Trace:
    if cfg.data_is_caputo:
        return data
    return caputo_l1(presmooth(data, cfg.presmooth_half_width))


def _check_mesh_point(basis: EigenBasis, cfg: ReconstructionConfig):
    L = basis.mesh.L
    if not (0.0 <= cfg.x0 <= L):
        raise ValueError(f"x0 = {cfg.x0} lies outside [0, {L}]")


# --------------------------------------------------------------------------
# source problem


def reconstruct_source_f(
    data: Trace, prob: SourceProblem, basis: EigenBasis, cfg: ReconstructionConfig
) -> ReconstructionResult:
    """Recover ``f`` from ``u(x0, .)`` (or its Caputo derivative when flagged).

    At step ``k`` the unknown enters through ``f_k R(x0, t_k)`` and through
    the current-value weight of the Duhamel sum, so

    ``f_k [R(x0) - sum_n g_n B1_n R_n(t_k)] = c_k + sum_n g_n H_{n,k}``

    with ``g_n = (lambda_n - 1) phi_n(x0)`` and ``H`` the known history.
    ``f(t_0)`` is tied to ``f(t_1)`` during the first step.
    """
    grid = data.grid
    if abs(grid.alpha - prob.alpha) > 0:
        raise ValueError("data grid and problem disagree on alpha")
    _check_mesh_point(basis, cfg)
    c = _caputo_data(data, cfg).values
    Rt = prob.R_table(grid)
    tail = spectral_tail(Rt, basis)
    warn_tail(tail, "source profile R")
    Rn = project(Rt, basis)
    Rx0 = prob.mesh.interp_weights(cfg.x0) @ Rt
    k_bad = np.flatnonzero(np.abs(Rx0) < cfg.delta)
    if k_bad.size:
        k = int(k_bad[0])
        raise FloorViolation(
            f"|R(x0, t)| < delta first at node {k} (t = {grid.nodes[k]:.6g})",
            k,
            float(grid.nodes[k]),
            float(Rx0[k]),
        )
    lt = basis.elliptic_lambdas
    g = lt * basis.at(cfg.x0)
    w = modal_weights(grid, lt)
    A, B = w.A, w.B
    n1 = grid.n_steps + 1
    fh = np.zeros(n1)
    F = np.zeros((basis.n_modes, n1))
    coefs = np.zeros(n1)
    lagged = []
    for k in range(1, n1):
        H = kernels.volterra_history(A, B, F, k)
        rhs = c[k] + g @ H
        coef = Rx0[k] - g @ (B[:, 1] * Rn[:, k])
        if k == 1:
            # f_0 := f_1, so the history term A_1 F_0 moves to the left side
            rhs = c[k]
            coef -= g @ (A[:, 1] * Rn[:, 0])
        coefs[k] = coef
        if abs(coef) < DEGENERATE:
            if not cfg.allow_lagging:
                raise IllPosedStep(f"step {k}: scalar coefficient {coef:.3e} vanishes")
            prev = fh[k - 1]
            fk = (rhs + g @ (B[:, 1] * Rn[:, k]) * prev) / Rx0[k]
            lagged.append(k)
        else:
            fk = rhs / coef
        fh[k] = fk
        if k == 1:
            fh[0] = fk
            F[:, 0] = fk * Rn[:, 0]
        F[:, k] = fk * Rn[:, k]
    if lagged:
        warnings.warn(f"explicit lagging used at {len(lagged)} steps", RuntimeWarning, stacklevel=2)
    # defect of the discrete identity with the reconstructed history
    U = kernels.volterra_convolve(A, B, np.ascontiguousarray(F))
    Au = g @ U
    resid = fh * Rx0 - c - Au
    resid[0] = 0.0
    return ReconstructionResult(
        f_hat=Trace(grid, fh),
        residual_trace=Trace(grid, resid),
        floor_margin=float(np.min(np.abs(Rx0))),
        diagnostics={"step_coefficients": coefs, "lagged_steps": lagged, "spectral_tail": tail},
        coeffs=U,
    )


# --------------------------------------------------------------------------
# potential problem


def _secant(func, x0, x1, tol, max_iter):
    f0 = func(x0)
    f1 = func(x1)
    for it in range(1, max_iter + 1):
        if f1 == f0:
            if abs(f1) <= tol:
                return x1, it
            break
        x2 = x1 - f1 * (x1 - x0) / (f1 - f0)
        x0, f0 = x1, f1
        x1 = x2
        f1 = func(x1)
        if abs(x1 - x0) <= tol * (1.0 + abs(x1)):
            return x1, it
    raise InnerIterationError(f"secant iteration stalled (last update {abs(x1 - x0):.3e})")


def reconstruct_potential_f(
    data: Trace,
    prob: PotentialProblem,
    basis: EigenBasis,
    cfg: ReconstructionConfig,
    *,
    shift: str = "diagonal",
    match: str | None = None,
) -> ReconstructionResult:
    """Recover ``f`` from ``v(x0, .)`` for ``D v + A_ell v + f q v = 0``.

    Each step solves the scalar equation
    ``phi(f_k) = f_k q(x0) v_hat(x0; f_k) + c_k + A_ell v_hat(x0; f_k) = 0``
    by secant iteration, where ``v_hat(.; f_k)`` is the forward step map
    (itself an inner fixed point).  The floor ``|q v_hat| >= delta`` is
    checked on the reconstructed state as the march proceeds.

    ``match`` selects the step equation.  ``"caputo"`` is the identity above
    with ``c_k`` the Caputo trace.  ``"trace"`` picks ``f_k`` so that
    ``v_hat(x0, t_k)`` equals the observed value, the time-integrated form of
    the same identity; it avoids differentiating the data, whose L1 error at
    the ``t^alpha`` onset is otherwise amplified by ``lambda_1 / v``.  The
    default is ``"caputo"`` when ``cfg.data_is_caputo`` and ``"trace"``
    otherwise.

    With ``shift="diagonal"`` a first pass without kernel shift supplies
    ``f_hat``, and a second pass moves the diagonal of ``f_hat q`` into the
    kernels exactly as the forward solver does.
    """
    grid = data.grid
    if abs(grid.alpha - prob.alpha) > 0:
        raise ValueError("data grid and problem disagree on alpha")
    if shift not in ("diagonal", "none"):
        raise ValueError(f"unknown shift {shift!r}")
    _check_mesh_point(basis, cfg)
    if match is None:
        match = "caputo" if cfg.data_is_caputo else "trace"
    if match not in ("caputo", "trace"):
        raise ValueError(f"unknown match {match!r}")
    if match == "trace" and cfg.data_is_caputo:
        raise ValueError("trace matching needs the raw trace, not its Caputo derivative")
    c = _caputo_data(data, cfg).values
    obs = presmooth(data, cfg.presmooth_half_width).values if match == "trace" else None
    v0 = prob.v0_nodes()
    tail = spectral_tail(v0, basis)
    warn_tail(tail, "initial value v0")
    qt = prob.q_table(grid)
    sh = np.zeros(basis.n_modes)
    res = _potential_march(c, obs, grid, prob, basis, cfg, qt, v0, sh)
    if shift == "diagonal":
        sh = diagonal_shift(basis, qt, res.f_hat.values)
        res = _potential_march(c, obs, grid, prob, basis, cfg, qt, v0, sh)
    res.diagnostics["spectral_tail"] = tail
    return res


def _potential_march(c, obs, grid, prob, basis, cfg, qt, v0, sh) -> ReconstructionResult:
    nw = basis.node_weights
    Phi = basis.phis
    lt = basis.elliptic_lambdas
    c0 = project(v0, basis)
    ix = prob.mesh.interp_weights(cfg.x0)
    px = basis.at(cfg.x0)
    g = lt * px
    qx0 = ix @ qt
    v0x = ix @ v0 - px @ c0  # part of v0 outside the basis, at x0
    n1 = grid.n_steps + 1
    w = modal_weights(grid, lt + sh)
    A, B = w.A, w.B
    B1 = B[:, 1]

    def floor_check(k, vx):
        val = qx0[k] * vx
        if abs(val) < cfg.delta:
            raise FloorViolation(
                f"|q(x0, t) v(x0, t)| < delta first at node {k} (t = {grid.nodes[k]:.6g})",
                k,
                float(grid.nodes[k]),
                float(val),
            )
        return abs(val)

    margin = floor_check(0, ix @ v0)
    fh = np.zeros(n1)
    G = np.zeros((basis.n_modes, n1))
    W = np.zeros((basis.n_modes, n1))
    inner_counts = np.zeros(n1, dtype=int)

    def g_zero(fk):
        return -lt * c0 - Phi @ (nw * fk * qt[:, 0] * v0)

    def step_state(k, fk, H, w_start):
        """Forward step map: modal ``w_k`` for a trial ``f_k``."""
        wq = nw * fk * qt[:, k]
        base = -lt * c0 - Phi @ (wq * v0)
        # at the first step f_0 is tied to f_1, so G_0 moves with the trial value
        hist = A[:, 1] * g_zero(fk) if k == 1 else H
        wk = w_start.copy()
        for _ in range(cfg.max_inner_iters):
            gk = base - Phi @ (wq * (Phi.T @ wk)) + sh * wk
            new = hist + B1 * gk
            d = float(np.max(np.abs(new - wk)))
            wk = new
            if d <= 1e-13 * max(1.0, float(np.max(np.abs(wk)))):
                return wk, gk
        raise InnerIterationError(f"step {k}: forward step map did not converge")

    for k in range(1, n1):
        H = kernels.volterra_history(A, B, G, k) if k > 1 else None
        start = W[:, k - 1]

        def resid(fk):
            wk, _ = step_state(k, fk, H, start)
            vx = v0x + px @ (c0 + wk)
            if obs is not None:
                return vx - obs[k]
            return fk * qx0[k] * vx + c[k] + g @ (c0 + wk)

        guess = fh[k - 1]
        fk, its = _secant(resid, guess, guess * (1.0 + 1e-3) + 1e-6, cfg.inner_tol, cfg.max_inner_iters)
        wk, gk = step_state(k, fk, H, start)
        inner_counts[k] = its
        fh[k] = fk
        W[:, k] = wk
        G[:, k] = gk
        if k == 1:
            fh[0] = fk
            G[:, 0] = g_zero(fk)
        margin = min(margin, floor_check(k, v0x + px @ (c0 + wk)))
    coeffs = W + c0[:, None]
    vx_all = v0x + px @ coeffs
    caputo_defect = fh * qx0 * vx_all + c + g @ coeffs
    caputo_defect[0] = 0.0
    resid = caputo_defect if obs is None else vx_all - obs
    return ReconstructionResult(
        f_hat=Trace(grid, fh),
        residual_trace=Trace(grid, resid),
        floor_margin=float(margin),
        diagnostics={"inner_iterations": inner_counts, "v_x0": vx_all, "caputo_defect": caputo_defect},
        coeffs=coeffs,
    )


def reconstruct_potential_window(data, prob, basis, cfg):
    """Like :func:`reconstruct_potential_f` but stops at a floor violation.

    Returns ``(result_or_None, stop_index)``; ``stop_index`` is ``None`` when
    the floor holds on the whole grid.  The result covers ``[0, t_{stop-1}]``.
    """
    try:
        return reconstruct_potential_f(data, prob, basis, cfg), None
    except FloorViolation as exc:
        if exc.index < 2:
            return None, exc.index
        grid = data.grid
        sub = TimeGrid(grid.nodes[exc.index - 1], exc.index - 1, grid.alpha)
        part = Trace(sub, data.values[: exc.index])
        ptab = prob.q_table(grid)[:, : exc.index]
        sub_prob = PotentialProblem(prob.mesh, prob.boundary, prob.a, prob.alpha, q=ptab, v0=prob.v0)
        return reconstruct_potential_f(part, sub_prob, basis, cfg), exc.index


# --------------------------------------------------------------------------
# Gronwall-type verifiers


@dataclass
class GronwallCheck:
    ok: bool
    margin: float
    hypothesis_holds: bool = True
    falsified_at: int | None = None
    constant: float | None = None
    resolved: bool = True

    def __bool__(self):
        return self.ok


#: largest product-integration self-weight for which a discrete hypothesis is informative
SELF_WEIGHT_LIMIT = 0.5


def discrete_self_weight(coef: float, mu: float, dt: float) -> float:
    """Weight of ``w(t_k)`` in ``coef * I^mu[w](t_k)`` under product integration.

    When it reaches 1 the discrete hypothesis ``w_k <= ... + coef I^mu[w]_k``
    no longer bounds ``w_k``, so no Gronwall conclusion can hold.
    """
    return coef * dt**mu / (mu * (mu + 1.0))


def _unresolved(coef, mu, dt):
    w = discrete_self_weight(coef, mu, dt)
    if w >= SELF_WEIGHT_LIMIT:
        return GronwallCheck(True, math.nan, resolved=False)
    return None


def weak_gronwall_constant(C: float, alpha: float, T: float) -> float:
    """Constant ``C'`` for the conclusion ``u <= C' d + C' int (t-s)^(alpha-1) d``.

    Iterating the hypothesis gives the resolvent kernel
    ``sum_{n>=1} C^{n+1} Gamma(alpha)^n tau^(n alpha - 1) / Gamma(n alpha)``, each term
    obtained by the Beta-function composition of the power kernels.  It is
    bounded by ``C^2 Gamma(alpha) E_{alpha,alpha}(C Gamma(alpha) T^alpha) tau^(alpha-1)``.
    """
    g = math.gamma(alpha)
    series = C * C * g * float(mlf.mittag_leffler(alpha, alpha, C * g * T**alpha))
    return max(C, series)


def verify_gronwall_weak(u: Trace, d: Trace, C: float, alpha: float, *, rtol: float = 1e-9) -> GronwallCheck:
    """Check the weak singular Gronwall inequality on discrete data.

    Hypothesis: ``u <= C d + C I[u]`` with ``I[w](t) = int_0^t (t-s)^(alpha-1) w``.
    Conclusion: ``u <= C' d + C' I[d]`` with :func:`weak_gronwall_constant`.
    ``margin`` is the smallest slack of the conclusion (``inf`` for empty data).
    """
    uv, dv = u.values, d.values
    if np.any(uv < 0) or np.any(dv < 0):
        raise ValueError("u and d must be nonnegative")
    skip = _unresolved(C, alpha, u.grid.dt)
    if skip is not None:
        return skip
    Iu = singular_convolution(alpha, u).values
    scale = max(1.0, float(np.max(np.abs(uv))), float(np.max(dv)))
    hyp = C * dv + C * Iu - uv
    if np.any(hyp < -rtol * scale):
        k = int(np.flatnonzero(hyp < -rtol * scale)[0])
        return GronwallCheck(True, math.inf, hypothesis_holds=False, falsified_at=k)
    Cp = weak_gronwall_constant(C, alpha, u.grid.T)
    Id = singular_convolution(alpha, d).values
    slack = Cp * dv + Cp * Id - uv
    if not np.any(uv > 0):
        return GronwallCheck(True, math.inf, constant=Cp)
    bad = np.flatnonzero(slack < -rtol * scale)
    if bad.size:
        return GronwallCheck(False, float(slack.min()), falsified_at=int(bad[0]), constant=Cp)
    return GronwallCheck(True, float(slack.min()), constant=Cp)


def lp_gronwall_bound(R: Trace, mu: float) -> float:
    """``E_{mu,1}(||R||_inf Gamma(mu) T^mu)``, an explicit constant for the Lp lemma."""
    rmax = float(np.max(np.abs(R.values)))
    return float(mlf.mittag_leffler(mu, 1.0, rmax * math.gamma(mu) * R.grid.T**mu))


def verify_lp_gronwall(f: Trace, u: Trace, R: Trace, p: float, mu: float, *, rtol: float = 1e-9) -> GronwallCheck:
    """Empirical constant ``C_hat = ||f||_p / ||u||_p`` under ``f <= u + I^mu[f R]``.

    ``ok`` means the hypothesis holds and ``C_hat`` does not exceed
    :func:`lp_gronwall_bound`.  ``margin`` is ``bound - C_hat``.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if not (math.isinf(p) or mu > 2.0 / p):
        raise ValueError("need mu > 2/p")
    for tr in (f, u, R):
        if np.any(tr.values < 0):
            raise ValueError("traces must be nonnegative")
    conv = singular_convolution(mu, f * R).values if mu < 1 else None
    if conv is None:
        raise ValueError("mu must lie in (0, 1)")
    skip = _unresolved(float(np.max(R.values)), mu, f.grid.dt)
    if skip is not None:
        return skip
    scale = max(1.0, float(np.max(f.values)))
    hyp = u.values + conv - f.values
    if np.any(hyp < -rtol * scale):
        k = int(np.flatnonzero(hyp < -rtol * scale)[0])
        return GronwallCheck(True, math.inf, hypothesis_holds=False, falsified_at=k)
    nf = lp_norm(f, p)
    nu = lp_norm(u, p)
    bound = lp_gronwall_bound(R, mu)
    if nu == 0:
        ok = nf == 0
        return GronwallCheck(ok, bound if ok else -math.inf, constant=0.0 if ok else math.inf)
    chat = nf / nu
    return GronwallCheck(chat <= bound * (1 + rtol), bound - chat, constant=chat)


def ml_gronwall_bound(a: float, b: float, mu: float, t) -> np.ndarray:
    """``a E_{mu,1}(b Gamma(mu) t^mu)``: the exact solution of the equality case."""
    t = np.asarray(t, dtype=float)
    return a * mlf.mittag_leffler(mu, 1.0, b * math.gamma(mu) * t**mu)


def verify_ml_gronwall(f: Trace, a: float, b: float, mu: float, *, rtol: float = 1e-9, atol: float = 0.0) -> GronwallCheck:
    """Nodewise check of ``f <= a E_{mu,1}(b Gamma(mu) t^mu)`` under ``f <= a + b I^mu[f]``.

    ``atol`` absorbs quadrature error when ``f`` is a discrete solution; both
    tolerances are relative to ``max(1, bound)``.
    """
    if np.any(f.values < 0):
        raise ValueError("f must be nonnegative")
    if not (0 < mu < 1):
        raise ValueError("mu must lie in (0, 1)")
    skip = _unresolved(b, mu, f.grid.dt)
    if skip is not None:
        return skip
    conv = singular_convolution(mu, f).values
    scale = max(1.0, float(np.max(f.values)))
    hyp = a + b * conv - f.values  # hypothesis defect, checked relative to max f
    if np.any(hyp < -rtol * scale):
        k = int(np.flatnonzero(hyp < -rtol * scale)[0])
        return GronwallCheck(True, math.inf, hypothesis_holds=False, falsified_at=k)
    bound = ml_gronwall_bound(a, b, mu, f.grid.nodes)
    slack = bound - f.values
    # tolerances scale with the bound, which grows like exp((b Gamma(mu))^(1/mu) t)
    bad = np.flatnonzero(slack < -(rtol + atol) * np.maximum(1.0, bound))
    if bad.size:
        return GronwallCheck(False, float(slack.min()), falsified_at=int(bad[0]))
    return GronwallCheck(True, float(slack.min()))


def solve_abel_volterra(a, b, mu: float, grid: TimeGrid, slack=None) -> Trace:
    """Product-integration solution of ``f = a + I^mu[b f] - slack``.

    ``a``, ``b`` and ``slack`` may be scalars or node arrays; ``b`` multiplies
    ``f`` inside the integral.  With constant ``b`` and ``slack = 0`` this is
    the equality case of the Mittag-Leffler Gronwall lemma.
    """
    n = grid.n_steps
    av = np.broadcast_to(np.asarray(a, dtype=float), (n + 1,))
    bv = np.broadcast_to(np.asarray(b, dtype=float), (n + 1,))
    sv = np.zeros(n + 1) if slack is None else np.broadcast_to(np.asarray(slack, dtype=float), (n + 1,))
    a0, c = product_weights(n, mu)
    s = grid.dt**mu / (mu * (mu + 1.0))
    f = np.zeros(n + 1)
    bf = np.zeros(n + 1)
    f[0] = av[0] - sv[0]
    bf[0] = bv[0] * f[0]
    for k in range(1, n + 1):
        hist = a0[k] * bf[0] + (c[k - 1 : 0 : -1] @ bf[1:k] if k > 1 else 0.0)
        f[k] = (av[k] - sv[k] + s * hist) / (1.0 - s * c[0] * bv[k])
        bf[k] = bv[k] * f[k]
    return Trace(grid, f)


# --------------------------------------------------------------------------


@dataclass
class StabilityRatio:
    ratio: float
    reciprocal: float
    f_distance: float
    data_distance: float


class IdenticalTraces(ZeroDivisionError):
    """The observation traces coincide, so the ratio is undefined."""


def stability_ratio(
    f1: Trace,
    f2: Trace,
    obs1: Trace,
    obs2: Trace,
    *,
    p: float = 2.0,
    obs_is_caputo: bool = False,
) -> StabilityRatio:
    """``||f1 - f2|| / ||D^alpha obs1 - D^alpha obs2||`` and its reciprocal."""
    c1 = obs1 if obs_is_caputo else caputo_l1(obs1)
    c2 = obs2 if obs_is_caputo else caputo_l1(obs2)
    df = lp_norm(f1 - f2, p)
    dc = lp_norm(c1 - c2, p)
    if dc == 0.0:
        raise IdenticalTraces("observation traces coincide")
    return StabilityRatio(df / dc, dc / df if df > 0 else math.inf, df, dc)
