import math
import warnings

import numpy as np
import pytest

from fracinv import mlf
from fracinv.forward import (
    PotentialProblem,
    SourceProblem,
    caputo_trace,
    modal_weights,
    observe,
    solve_l1,
    solve_potential_spectral,
    solve_source_spectral,
)
from fracinv.fracops import TimeGrid, Trace, relative_error
from fracinv.inverse import (
    SELF_WEIGHT_LIMIT,
    FloorViolation,
    IdenticalTraces,
    IllPosedStep,
    ReconstructionConfig,
    discrete_self_weight,
    ml_gronwall_bound,
    reconstruct_potential_f,
    reconstruct_potential_window,
    reconstruct_source_f,
    solve_abel_volterra,
    stability_ratio,
    verify_gronwall_weak,
    verify_lp_gronwall,
    verify_ml_gronwall,
)
from fracinv.spectral import BoundarySpec

BD = BoundarySpec()
CFG = ReconstructionConfig(delta=0.1, x0=0.5)


def src(b, alpha, f=None, R=None):
    return SourceProblem(b.mesh, BD, 1.0, alpha, f=f, R=b.phis[0] if R is None else R)


def fine_data(prob, grid, f_func, refine=4):
    fine = grid.refine(refine)
    fld = solve_l1(prob.with_f(Trace.from_function(fine, f_func)), fine)
    return observe(fld, 0.5).restrict(grid)


def test_config_validation():
    with pytest.raises(ValueError):
        ReconstructionConfig(delta=0.0, x0=0.5)
    with pytest.raises(ValueError):
        ReconstructionConfig(delta=0.1, x0=0.5, gamma=0.2)
    assert ReconstructionConfig(delta=0.1, x0=0.5, gamma=0.5).mu_for(0.6) == pytest.approx(0.3)


# ---- source

def test_source_inverse_crime_caputo_mode(dirichlet_basis):
    # [DERIVED] same-grid spectral data with the exact Caputo trace: the
    # reconstruction inverts the discrete forward map
    b = dirichlet_basis
    g = TimeGrid(1.0, 1024, 0.5)
    p = src(b, 0.5, f=Trace(g, np.ones(1025)))
    fld = solve_source_spectral(p, g, b).field
    data = caputo_trace(fld, p, 0.5)
    res = reconstruct_source_f(data, p, b, ReconstructionConfig(delta=0.1, x0=0.5, data_is_caputo=True))
    assert np.max(np.abs(res.f_hat.values - 1)) <= 1e-3
    assert np.max(np.abs(res.residual_trace.values)) <= 1e-10


def test_source_zero_data(small_basis):
    g = TimeGrid(1.0, 64, 0.5)
    res = reconstruct_source_f(Trace(g, np.zeros(65)), src(small_basis, 0.5), small_basis, CFG)
    assert np.all(res.f_hat.values == 0)


@pytest.mark.parametrize("fn,tol", [(lambda t: t, 2e-2), (lambda t: np.sin(2 * np.pi * t), 2e-2)])
def test_source_roundtrip_fine_data(small_basis, fn, tol):
    # [DERIVED] L1 data on a 4x finer grid, restricted (no inverse crime)
    b = small_basis
    g = TimeGrid(1.0, 256, 0.5)
    p = src(b, 0.5, R=(b.phis[0], lambda t: 1 + t))
    res = reconstruct_source_f(fine_data(p, g, fn), p, b, CFG)
    truth = Trace.from_function(g, fn)
    assert relative_error(res.f_hat, truth) <= tol
    assert np.max(np.abs(res.residual_trace.values)) <= 1e-10 * max(1.0, np.max(np.abs(res.f_hat.values)))


def test_source_floor_crossing(small_basis):
    b = small_basis
    g = TimeGrid(1.0, 200, 0.5)
    tc = 0.7
    R = (b.phis[0], lambda t: 1 - t / tc)
    Rx0 = b.at(0.5)[0] * (1 - g.nodes / tc)
    expected = int(np.flatnonzero(np.abs(Rx0) < 0.1)[0])
    with pytest.raises(FloorViolation) as ei:
        reconstruct_source_f(Trace(g, np.zeros(201)), src(b, 0.5, R=R), b, CFG)
    assert ei.value.index == expected
    assert ei.value.time == pytest.approx(g.nodes[expected])
    assert abs(ei.value.value) < 0.1
    assert abs(Rx0[expected - 1]) >= 0.1


def _degenerate_profile(b, g, x0):
    # R = phi_1 + beta phi_2 with beta chosen so the step coefficient vanishes for k >= 2
    lt = b.elliptic_lambdas
    B1 = modal_weights(g, lt).B[:, 1]
    ph = b.at(x0)
    a1 = ph[0] * (1 - lt[0] * B1[0])
    a2 = ph[1] * (1 - lt[1] * B1[1])
    return b.phis[0] - (a1 / a2) * b.phis[1]


def test_source_ill_posed_step(small_basis):
    b = small_basis
    g = TimeGrid(1.0, 16, 0.5)
    x0 = 0.3
    R = _degenerate_profile(b, g, x0)
    p = src(b, 0.5, R=R)
    data = Trace(g, g.nodes)
    cfg = ReconstructionConfig(delta=1e-3, x0=x0, allow_lagging=False)
    with pytest.raises(IllPosedStep):
        reconstruct_source_f(data, p, b, cfg)
    with pytest.warns(RuntimeWarning, match="lagging"):
        res = reconstruct_source_f(data, p, b, ReconstructionConfig(delta=1e-3, x0=x0))
    assert len(res.diagnostics["lagged_steps"]) > 0


def test_source_bad_inputs(small_basis):
    g = TimeGrid(1.0, 16, 0.5)
    with pytest.raises(ValueError):
        reconstruct_source_f(Trace(g, np.zeros(17)), src(small_basis, 0.4), small_basis, CFG)
    with pytest.raises(ValueError):
        reconstruct_source_f(Trace(g, np.zeros(17)), src(small_basis, 0.5), small_basis,
                             ReconstructionConfig(delta=0.1, x0=3.0))


# ---- potential

def pot(b, f=None, q=1.0):
    return PotentialProblem(b.mesh, BD, 1.0, 0.5, f=f, q=q, v0=b.phis[0])


def test_potential_zero_coefficient(small_basis):
    b = small_basis
    g = TimeGrid(0.05, 128, 0.5)
    p = pot(b, f=Trace(g, np.zeros(129)))
    data = observe(solve_potential_spectral(p, g, b).field, 0.5)
    res, stop = reconstruct_potential_window(data, pot(b), b, CFG)
    assert stop is None
    assert np.max(np.abs(res.f_hat.values)) <= 1e-8


@pytest.mark.parametrize("mode", ["caputo", "trace"])
def test_potential_closed_form(dirichlet_basis, mode):
    # [DERIVED] q = 1, v0 = phi_1: v(x0, t) = phi_1(x0) E(-(lam + 1) t^a)
    b = dirichlet_basis
    g = TimeGrid(1.0, 1024, 0.5)
    lam = b.elliptic_lambdas[0]
    px = b.at(0.5)[0]
    v = px * mlf.ml_decay(0.5, lam + 1.0, g.nodes)
    if mode == "caputo":
        data = Trace(g, -(lam + 1.0) * v)
        cfg = ReconstructionConfig(delta=0.1, x0=0.5, data_is_caputo=True)
    else:
        data = Trace(g, v)
        cfg = CFG
    res, stop = reconstruct_potential_window(data, pot(b), b, cfg)
    window = int(np.flatnonzero(np.abs(v) < 0.1)[0])
    assert abs(stop - window) <= 1
    assert np.max(np.abs(res.f_hat.values - 1.0)) <= 1e-2


def test_potential_residual_small(small_basis):
    b = small_basis
    g = TimeGrid(0.02, 128, 0.5)
    p = pot(b, f=Trace.from_function(g, lambda t: 1 + t), q=lambda x, t: 1 + 0.3 * x * (1 - x))
    data = observe(solve_l1(p, g), 0.5)
    res = reconstruct_potential_f(data, pot(b, q=p.q), b, CFG)
    assert np.max(np.abs(res.residual_trace.values)) <= 1e-8
    with pytest.raises(ValueError):
        reconstruct_potential_f(data, pot(b), b, ReconstructionConfig(delta=0.1, x0=0.5, data_is_caputo=True),
                                match="trace")


def test_potential_floor_raises(small_basis):
    b = small_basis
    g = TimeGrid(1.0, 128, 0.5)
    v = b.at(0.5)[0] * mlf.ml_decay(0.5, b.elliptic_lambdas[0] + 1.0, g.nodes)
    with pytest.raises(FloorViolation) as ei:
        reconstruct_potential_f(Trace(g, v), pot(b), b, CFG)
    assert 0 < ei.value.index < 128


# ---- Gronwall verifiers

def test_weak_gronwall_examples():
    g = TimeGrid(1.0, 100, 0.5)
    z = Trace(g, np.zeros(101))
    one = Trace(g, np.ones(101))
    r = verify_gronwall_weak(z, z, 1.0, 0.5)
    assert r.ok and r.margin == math.inf
    assert verify_gronwall_weak(z, one, 1.0, 0.5).ok


def test_weak_gronwall_random(rng):
    # [DERIVED] u is the maximal solution of the hypothesis minus random slack
    for _ in range(100):
        n = int(rng.integers(50, 400))
        alpha = float(rng.uniform(0.3, 0.95))
        C = float(rng.uniform(0.1, 2.0))
        g = TimeGrid(float(rng.uniform(0.5, 2.0)), n, alpha)
        if discrete_self_weight(C, alpha, g.dt) > 0.25:
            continue
        d = rng.uniform(0, 1, n + 1)
        u = solve_abel_volterra(C * d, C, alpha, g, slack=rng.uniform(0, 0.1, n + 1))
        u = Trace(g, np.maximum(u.values, 0))
        r = verify_gronwall_weak(u, Trace(g, d), C, alpha)
        assert r.hypothesis_holds and r.ok, r


def test_unresolved_scope():
    g = TimeGrid(1.0, 4, 0.1)
    C = 5.0
    assert discrete_self_weight(C, 0.1, g.dt) >= SELF_WEIGHT_LIMIT
    one = Trace(g, np.ones(5))
    r = verify_gronwall_weak(one, one, C, 0.1)
    assert r.ok and not r.resolved and math.isnan(r.margin)


def test_lp_gronwall_examples(rng):
    g = TimeGrid(1.0, 200, 0.5)
    u = Trace(g, rng.uniform(0.1, 1, 201))
    r = verify_lp_gronwall(u, u, Trace(g, np.zeros(201)), 2.5, 0.9)
    assert r.ok and r.constant == pytest.approx(1.0)
    z = Trace(g, np.zeros(201))
    R = Trace(g, np.full(201, 0.5))
    f = solve_abel_volterra(0.0, 0.5, 0.9, g)
    assert np.all(f.values == 0)
    assert verify_lp_gronwall(f, z, R, 4.0, 0.9).ok
    # p = inf wiring matches the Mittag-Leffler bound
    f = solve_abel_volterra(u.values, 0.5, 0.9, g)
    r = verify_lp_gronwall(f, u, R, math.inf, 0.9)
    assert r.ok and r.constant >= 1.0
    with pytest.raises(ValueError):
        verify_lp_gronwall(f, u, R, 2.0, 0.9)  # needs mu > 2/p


def test_ml_gronwall_examples():
    g = TimeGrid(1.0, 64, 0.5)
    a = 2.0
    f = Trace(g, np.full(65, a))
    r = verify_ml_gronwall(f, a, 0.0, 0.5)
    assert r.ok and r.margin == 0.0
    assert ml_gronwall_bound(a, 1.0, 0.5, 0.0) == a


def test_ml_gronwall_equality_case():
    # [DERIVED] discrete solution of f = a + b I^mu f against a E_mu(b Gamma(mu) t^mu)
    mu, a, b = 0.8, 1.0, 1.0
    g = TimeGrid(1.0, 2048, 0.5)
    f = solve_abel_volterra(a, b, mu, g)
    bound = ml_gronwall_bound(a, b, mu, g.nodes)
    assert np.max(np.abs(f.values - bound)) <= 1e-6
    assert verify_ml_gronwall(f, a, b, mu, atol=1e-6).ok


def test_ml_gronwall_literal_form_fails():
    # the argument (b Gamma(mu))^(1/mu) t^mu understates the equality case when b Gamma(mu) < 1
    mu, a, b = 0.8, 1.0, 0.5
    g = TimeGrid(1.0, 1024, 0.5)
    f = solve_abel_volterra(a, b, mu, g)
    literal = a * mlf.mittag_leffler(mu, 1.0, (b * math.gamma(mu)) ** (1 / mu) * g.nodes**mu)
    assert np.any(f.values > literal * (1 + 1e-3))
    assert verify_ml_gronwall(f, a, b, mu, atol=1e-5).ok


def test_ml_gronwall_random_subsolutions(rng):
    for _ in range(50):
        mu = float(rng.uniform(0.5, 0.95))
        a, b = float(rng.uniform(0.1, 2)), float(rng.uniform(0, 1.5))
        g = TimeGrid(1.0, 512, 0.5)
        f = solve_abel_volterra(a, b, mu, g, slack=rng.uniform(0, 0.05, 513) * a)
        f = Trace(g, np.maximum(f.values, 0))
        r = verify_ml_gronwall(f, a, b, mu, atol=1e-4)
        assert r.hypothesis_holds and r.ok


# ---- stability ratios

def test_identical_traces(small_basis):
    g = TimeGrid(1.0, 32, 0.5)
    t = Trace(g, g.nodes)
    with pytest.raises(IdenticalTraces):
        stability_ratio(t, t, t, t)


def test_ratio_independent_of_eps(small_basis):
    # [DERIVED] source problem is linear: f2 = f1 + eps gives a fixed ratio
    b = small_basis
    g = TimeGrid(1.0, 256, 0.5)
    f1 = Trace.from_function(g, lambda t: np.sin(3 * t))
    p1 = src(b, 0.5, f=f1)
    c1 = caputo_trace(solve_source_spectral(p1, g, b).field, p1, 0.5)
    ratios = []
    for eps in (1e-3, 1e-2, 1e-1):
        p2 = src(b, 0.5, f=f1 + eps)
        c2 = caputo_trace(solve_source_spectral(p2, g, b).field, p2, 0.5)
        ratios.append(stability_ratio(f1, p2.f, c1, c2, obs_is_caputo=True).ratio)
    assert max(ratios) / min(ratios) - 1 <= 1e-2
