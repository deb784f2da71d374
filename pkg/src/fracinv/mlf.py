"""Mittag-Leffler functions on the real line.

``E_{a,b}(z) = sum_k z**k / Gamma(a*k + b)`` is evaluated by one of three
schemes, each returning an error estimate:

* Taylor series for ``|z| <= 1`` and for ``z > 0``;
* the asymptotic expansion ``-sum_k z**-k / Gamma(b - a*k)`` for large
  negative ``z`` (plus the pole residues when ``1 < a <= 2``);
* trapezoidal quadrature of the inverse Laplace integral on a parabolic
  contour in the intermediate band.

Points whose estimate exceeds the contract tolerance are recomputed by an
extended-precision series (mpmath).  If that is infeasible,
:class:`MittagLefflerError` is raised.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import mpmath
import numpy as np
from scipy import special

from ._accel import njit
from . import _accel

#: relative accuracy promised by :func:`mittag_leffler`
TOL = 1e-10
# cheap schemes must beat this before the contour is skipped
_ACCEPT = 1e-13
_EPS = np.finfo(float).eps
_N_CONTOUR = 20
_N_CONTOUR_CHECK = 16
_N_ASYMPTOTIC = 80
# measured contour roundoff stays below ~0.5 eps * sum|terms|
_CONTOUR_ROUNDOFF = 4.0
_MAX_SERIES = 200_000
# the extended precision series needs ~x**(1/a) / ln(10) digits
_MAX_FALLBACK_SCALE = 2500.0


class MittagLefflerError(ArithmeticError):
    """No evaluation scheme met the accuracy contract."""


@dataclass(frozen=True)
class MlParams:
    alpha: float
    beta: float = 1.0

    def __post_init__(self):
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not math.isfinite(self.beta):
            raise ValueError(f"beta must be finite, got {self.beta}")

    def __call__(self, z):
        return mittag_leffler(self.alpha, self.beta, z)


def gamma_fn(x: float) -> float:
    """Gamma function; raises ``ValueError`` at the poles ``0, -1, -2, ...``."""
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise ValueError(f"Gamma has a pole at {x}")
    return math.gamma(x)


# --------------------------------------------------------------------------
# scalar kernels (compiled by numba when enabled)


@njit
def _rgamma(x):
    if x <= 0.0 and x == math.floor(x):
        return 0.0
    if x > 170.0:
        return math.exp(-math.lgamma(x))
    if x < -170.0:
        return math.sin(math.pi * x) / math.pi * math.exp(math.lgamma(1.0 - x))
    return 1.0 / math.gamma(x)


@njit
def _series(alpha, beta, z):
    if z == 0.0:
        return _rgamma(beta), 0.0
    logz = math.log(abs(z))
    s = 0.0
    absum = 0.0
    prev = np.inf
    last = 0.0
    for k in range(_MAX_SERIES):
        arg = alpha * k + beta
        if arg > 1.0:
            t = math.exp(k * logz - math.lgamma(arg))
            if z < 0.0 and k % 2 == 1:
                t = -t
        else:
            t = z**k * _rgamma(arg)
        s += t
        absum += abs(t)
        m = abs(t)
        last = m
        if arg > 1.0 and m != 0.0 and m < prev and m <= 1e-17 * absum:
            break
        if not math.isfinite(s):
            break
        prev = m
    return s, 8.0 * _EPS * absum + last


@njit
def _asymptotic(alpha, beta, z):
    # z < 0
    x = -z
    s = 0.0
    prev = np.inf
    for k in range(1, _N_ASYMPTOTIC):
        r = _rgamma(beta - alpha * k)
        if r == 0.0:
            continue
        t = r * x ** (-k)
        if k % 2 == 0:
            t = -t
        m = abs(t)
        if m > prev:
            break
        s += t
        prev = m
    est = prev if math.isfinite(prev) else 0.0
    xs = x ** (1.0 / alpha)
    if alpha < 1.0 or alpha == 1.0:
        # beyond-all-orders remainder; the poles sit off the principal sheet
        est += 2.0 / alpha * xs ** (1.0 - beta) * math.exp(-xs * abs(math.cos(math.pi / alpha)))
    else:
        p = xs * cmath.exp(1j * math.pi / alpha)
        s += 2.0 / alpha * (p ** (1.0 - beta) * cmath.exp(p)).real
        est += 8.0 * _EPS * 2.0 / alpha * abs(p ** (1.0 - beta)) * math.exp(p.real)
    return s, est


@njit
def _contour(alpha, beta, z, n):
    # parabola s(u) = mu (1 + iu)^2, trapezoidal rule, conjugate symmetry
    h = 3.0 / n
    mu = math.pi * n / 12.0
    acc = 0.0
    mag = 0.0
    for k in range(n + 1):
        w = 1.0 + 1j * (k * h)
        s = mu * w * w
        term = cmath.exp(s) * s ** (alpha - beta) / (s**alpha - z) * (2j * mu * w)
        c = 0.5 if k == 0 else 1.0
        acc += c * term.imag
        mag += c * abs(term)
    return h / math.pi * acc, h / math.pi * mag


@njit
def _ml_point(alpha, beta, z):
    """Return ``(value, error_estimate, ok)`` for one real argument."""
    if math.isnan(z):
        return z, 0.0, True
    if z == 0.0:
        return _rgamma(beta), 0.0, True
    if alpha == 1.0 and beta <= 1.0 and beta == math.floor(beta):
        # E_{1,1-m}(z) = z^m e^z
        return z ** (1.0 - beta) * math.exp(z), 0.0, True
    if z >= -1.0:
        v, e = _series(alpha, beta, z)
        return v, e, (not math.isfinite(v)) or e <= TOL * abs(v)
    v, e = _asymptotic(alpha, beta, z)
    if e <= _ACCEPT * abs(v):
        return v, e, True
    if alpha <= 1.0:
        v, mag = _contour(alpha, beta, z, _N_CONTOUR)
        w, _ = _contour(alpha, beta, z, _N_CONTOUR_CHECK)
        e = abs(v - w) + _CONTOUR_ROUNDOFF * _EPS * mag
        return v, e, e <= TOL * abs(v)
    v, e = _series(alpha, beta, z)
    return v, e, e <= TOL * abs(v)


@njit
def _ml_array_nb(alpha, beta, z):
    n = z.size
    out = np.empty(n)
    est = np.empty(n)
    ok = np.empty(n, dtype=np.bool_)
    for i in range(n):
        v, e, good = _ml_point(alpha, beta, z[i])
        out[i] = v
        est[i] = e
        ok[i] = good
    return out, est, ok


# --------------------------------------------------------------------------
# vectorised numpy counterparts


def _np_rgamma(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = special.rgamma(x)
        big = x > 170.0
        out[big] = np.exp(-special.gammaln(x[big]))
        neg = x < -170.0
        xn = x[neg]
        out[neg] = np.sin(np.pi * xn) / np.pi * np.exp(special.gammaln(1.0 - xn))
    return out


def _np_series(alpha, beta, z):
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    est = np.zeros_like(z)
    if z.size == 0:
        return out, est
    zmax = float(np.max(np.abs(z)))
    peak = zmax ** (1.0 / alpha) / alpha if zmax > 0 else 0.0
    nterms = int(min(_MAX_SERIES, math.ceil(2.0 * peak + (40.0 - min(beta, 0.0)) / alpha) + 4))
    k = np.arange(nterms, dtype=float)
    arg = alpha * k + beta
    nz = z != 0.0
    logz = np.full_like(z, -np.inf)
    logz[nz] = np.log(np.abs(z[nz]))
    direct = arg <= 1.0
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        lg = special.gammaln(np.where(direct, 2.0, arg))
        t = np.exp(k[None, :] * logz[:, None] - lg[None, :])
        odd = (k % 2 == 1)[None, :] & (z < 0.0)[:, None]
        t = np.where(odd, -t, t)
        if direct.any():
            kd = k[direct]
            td = z[:, None] ** kd[None, :] * _np_rgamma(arg[direct])[None, :]
            t[:, direct] = td
        t[:, 0] = _np_rgamma(np.array([beta]))[0]
        t = np.nan_to_num(t, nan=0.0)
    out = t.sum(axis=1)
    est = 8.0 * _EPS * np.abs(t).sum(axis=1) + np.abs(t[:, -1])
    return out, est


def _np_asymptotic(alpha, beta, z):
    z = np.asarray(z, dtype=float)
    x = -z
    k = np.arange(1, _N_ASYMPTOTIC, dtype=float)
    r = _np_rgamma(beta - alpha * k)
    sign = np.where(k % 2 == 0, -1.0, 1.0)
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        t = sign[None, :] * r[None, :] * x[:, None] ** (-k[None, :])
    m = np.abs(t)
    live = r != 0.0
    mm = np.where(live[None, :], m, np.inf)
    # running minimum of the magnitudes of the non-vanishing terms before k
    runmin = np.minimum.accumulate(mm, axis=1)
    before = np.concatenate([np.full((x.size, 1), np.inf), runmin[:, :-1]], axis=1)
    grow = live[None, :] & (m > before)
    first = np.where(grow.any(axis=1), grow.argmax(axis=1), t.shape[1])
    keep = np.arange(t.shape[1])[None, :] < first[:, None]
    out = np.where(keep, t, 0.0).sum(axis=1)
    est = np.where(keep & live[None, :], m, np.inf).min(axis=1)
    est = np.where(np.isfinite(est), est, 0.0)
    xs = x ** (1.0 / alpha)
    with np.errstate(over="ignore", under="ignore"):
        if alpha <= 1.0:
            est = est + 2.0 / alpha * xs ** (1.0 - beta) * np.exp(-xs * abs(math.cos(math.pi / alpha)))
        else:
            p = xs * cmath.exp(1j * math.pi / alpha)
            res = p ** (1.0 - beta) * np.exp(p)
            out = out + 2.0 / alpha * res.real
            est = est + 16.0 * _EPS / alpha * np.abs(res)
    return out, est


def _np_contour(alpha, beta, z, n):
    z = np.asarray(z, dtype=float)
    h = 3.0 / n
    mu = math.pi * n / 12.0
    w = 1.0 + 1j * h * np.arange(n + 1)
    s = mu * w * w
    g = np.exp(s) * s ** (alpha - beta) * (2j * mu * w)
    term = g[None, :] / (s[None, :] ** alpha - z[:, None])
    c = np.ones(n + 1)
    c[0] = 0.5
    return h / math.pi * (term.imag @ c), h / math.pi * (np.abs(term) @ c)


def _ml_array_np(alpha, beta, z):
    z = np.asarray(z, dtype=float)
    out = np.full(z.shape, np.nan)
    est = np.zeros(z.shape)
    ok = np.ones(z.shape, dtype=bool)
    done = np.isnan(z)
    zero = z == 0.0
    out[zero] = _np_rgamma(np.array([beta]))[0]
    done |= zero
    if alpha == 1.0 and beta <= 1.0 and beta == math.floor(beta):
        sel = ~done
        out[sel] = z[sel] ** (1.0 - beta) * np.exp(z[sel])
        return out, est, ok
    ser = ~done & (z >= -1.0)
    if ser.any():
        v, e = _np_series(alpha, beta, z[ser])
        out[ser], est[ser] = v, e
        ok[ser] = ~np.isfinite(v) | (e <= TOL * np.abs(v))
    done |= ser
    rest = np.flatnonzero(~done)
    if rest.size == 0:
        return out, est, ok
    v, e = _np_asymptotic(alpha, beta, z[rest])
    good = e <= _ACCEPT * np.abs(v)
    out[rest[good]], est[rest[good]] = v[good], e[good]
    rest = rest[~good]
    if rest.size == 0:
        return out, est, ok
    if alpha <= 1.0:
        v, mag = _np_contour(alpha, beta, z[rest], _N_CONTOUR)
        w, _ = _np_contour(alpha, beta, z[rest], _N_CONTOUR_CHECK)
        e = np.abs(v - w) + _CONTOUR_ROUNDOFF * _EPS * mag
    else:
        v, e = np.empty(rest.size), np.empty(rest.size)
        series = getattr(_series, "py_func", _series)
        for i, zi in enumerate(z[rest]):
            v[i], e[i] = series(alpha, beta, float(zi))
    out[rest], est[rest] = v, e
    ok[rest] = e <= TOL * np.abs(v)
    return out, est, ok


# --------------------------------------------------------------------------
# extended precision fallback


def _ml_mpmath(alpha: float, beta: float, z: float) -> float:
    scale = abs(z) ** (1.0 / alpha)
    if scale > _MAX_FALLBACK_SCALE:
        raise MittagLefflerError(
            f"E_{{{alpha},{beta}}}({z}): no scheme reached relative accuracy {TOL}"
        )
    dps = int(scale / math.log(10.0)) + 40
    with mpmath.workdps(dps):
        a, b, zz = mpmath.mpf(alpha), mpmath.mpf(beta), mpmath.mpf(z)
        s = mpmath.mpf(0)
        tiny = mpmath.mpf(10) ** (-dps + 10)
        k = 0
        while True:
            t = zz**k * mpmath.rgamma(a * k + b)
            s += t
            if a * k + b > 1 and k > scale / alpha and abs(t) <= tiny * (abs(s) + tiny):
                break
            k += 1
            if k > 20 * _MAX_SERIES:
                raise MittagLefflerError(f"extended precision series stalled at z={z}")
        return float(s)


def mittag_leffler(alpha, beta, z=None, *, with_error: bool = False):
    """Two-parameter Mittag-Leffler function ``E_{alpha,beta}(z)`` for real ``z``.

    Call as ``mittag_leffler(alpha, beta, z)`` or ``mittag_leffler(params, z)``
    with an :class:`MlParams`.

    Parameters
    ----------
    alpha : float or MlParams
        Order, ``0 < alpha <= 2``.
    beta : float
        Second parameter, any finite real (or ``z`` when ``alpha`` is an
        :class:`MlParams`).
    z : float or array_like
        Real argument(s).
    with_error : bool
        Also return the per-point absolute error estimate.

    Raises
    ------
    MittagLefflerError
        If a point cannot be evaluated to relative accuracy :data:`TOL`.
    """
    if isinstance(alpha, MlParams):
        if z is not None:
            raise TypeError("pass either (params, z) or (alpha, beta, z)")
        alpha, beta, z = alpha.alpha, alpha.beta, beta
    elif z is None:
        raise TypeError("missing argument z")
    alpha = float(alpha)
    beta = float(beta)
    if not (0.0 < alpha <= 2.0):
        raise ValueError(f"alpha must lie in (0, 2], got {alpha}")
    if not math.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta}")
    zarr = np.asarray(z, dtype=float)
    flat = np.ascontiguousarray(zarr.ravel())
    if _accel.USE_NUMBA:
        out, est, ok = _ml_array_nb(alpha, beta, flat)
    else:
        out, est, ok = _ml_array_np(alpha, beta, flat)
    for i in np.flatnonzero(~ok):
        out[i] = _ml_mpmath(alpha, beta, float(flat[i]))
        est[i] = _EPS * abs(out[i])
    out = out.reshape(zarr.shape)
    est = est.reshape(zarr.shape)
    if zarr.ndim == 0:
        out, est = float(out), float(est)
    return (out, est) if with_error else out


def ml_decay(alpha: float, lam, t):
    """Relaxation ``E_{alpha,1}(-lam * t**alpha)``; equals 1 at ``t = 0``."""
    _check_order(alpha)
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(lam < 0) or np.any(t < 0):
        raise ValueError("ml_decay needs lam >= 0 and t >= 0")
    return mittag_leffler(alpha, 1.0, -lam * t**alpha)


def ml_kernel(alpha: float, lam, t):
    """Duhamel kernel ``t**(alpha-1) * E_{alpha,alpha}(-lam * t**alpha)`` (positive)."""
    _check_order(alpha)
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("ml_kernel is singular at t = 0; need t > 0")
    if np.any(lam < 0):
        raise ValueError("ml_kernel needs lam >= 0")
    return t ** (alpha - 1.0) * mittag_leffler(alpha, alpha, -lam * t**alpha)


def ml_kernel_integral(alpha: float, lam, t, order: int = 1):
    """Repeated integrals of the Duhamel kernel from 0 to ``t``.

    ``order=1`` gives ``t**alpha E_{alpha,alpha+1}(-lam t**alpha)``, which
    equals ``(1 - ml_decay(alpha, lam, t)) / lam`` for ``lam > 0``;
    ``order=2`` integrates once more.
    """
    _check_order(alpha)
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    lam = np.asarray(lam, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(lam < 0):
        raise ValueError("ml_kernel_integral needs t >= 0 and lam >= 0")
    shift = alpha + order - 1.0
    return t**shift * mittag_leffler(alpha, shift + 1.0, -lam * t**alpha)


def _check_order(alpha):
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"fractional order must lie in (0, 1], got {alpha}")
