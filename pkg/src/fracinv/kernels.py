"""History sums shared by the time-fractional solvers.

Every routine exists twice: an ``@njit`` loop and a vectorised numpy
version.  :data:`fracinv._accel.USE_NUMBA` picks the one bound to the
public name; both stay importable (``*_nb`` / ``*_np``) so tests and the
benchmark can compare them.  Summation order is fixed in both, which keeps
results independent of scheduling.
"""

from __future__ import annotations

import numpy as np

from . import _accel
from ._accel import njit

# --------------------------------------------------------------------------
# causal convolution  out[n] = sum_{j=0}^{n} c[n-j] * w[j]


@njit
def causal_convolve_nb(c, w):
    # scatter form: each out[i] still accumulates in ascending j, and the
    # inner loop is an axpy the compiler can vectorise without reassociation
    n = w.shape[0]
    out = np.zeros(n)
    for j in range(n):
        wj = w[j]
        for i in range(j, n):
            out[i] += c[i - j] * wj
    return out


def causal_convolve_np(c, w):
    w = np.asarray(w, dtype=float)
    return np.convolve(np.asarray(c, dtype=float)[: w.size], w)[: w.size]


# --------------------------------------------------------------------------
# modal product-integration Volterra sums
#
# For weights A, B of shape (modes, n+1) (column 0 unused) and modal data
# F of shape (modes, n+1), the full convolution is
#     u[:, k] = sum_{m=1}^{k} A[:, m] F[:, k-m] + B[:, m] F[:, k-m+1].
# The "history" at step k omits the implicit term B[:, 1] F[:, k].


@njit
def volterra_history_nb(A, B, F, k):
    modes = A.shape[0]
    out = np.zeros(modes)
    for i in range(modes):
        s = 0.0
        for m in range(1, k + 1):
            s += A[i, m] * F[i, k - m]
        for m in range(2, k + 1):
            s += B[i, m] * F[i, k - m + 1]
        out[i] = s
    return out


def volterra_history_np(A, B, F, k):
    if k == 0:
        return np.zeros(A.shape[0])
    # F[:, k-1::-1] has F[:, k-m] at position m-1
    back = F[:, k - 1 :: -1] if k > 0 else F[:, :0]
    s = np.einsum("ij,ij->i", A[:, 1 : k + 1], back)
    if k >= 2:
        s = s + np.einsum("ij,ij->i", B[:, 2 : k + 1], back[:, : k - 1])
    return s


@njit
def volterra_convolve_nb(A, B, F):
    modes, n1 = F.shape
    out = np.zeros((modes, n1))
    for i in range(modes):
        a = A[i]
        b = B[i]
        o = out[i]
        for j in range(n1):
            fj = F[i, j]
            # A-part: F_j enters u_k with weight A_{k-j}, k > j
            for k in range(j + 1, n1):
                o[k] += a[k - j] * fj
            # B-part: F_j enters u_k with weight B_{k-j+1}, k >= max(j, 1)
            if j >= 1:
                for k in range(j, n1):
                    o[k] += b[k - j + 1] * fj
    return out


def volterra_convolve_np(A, B, F):
    modes, n1 = F.shape
    out = np.zeros((modes, n1))
    a = A.copy()
    a[:, 0] = 0.0
    # the B-part is a convolution against F shifted by one step
    b = np.zeros_like(B)
    b[:, : n1 - 1] = B[:, 1:]
    fz = F.copy()
    fz[:, 0] = 0.0
    for i in range(modes):
        out[i] = np.convolve(a[i], F[i])[:n1] + np.convolve(b[i], fz[i])[:n1]
    out[:, 0] = 0.0
    return out


# --------------------------------------------------------------------------
# L1 memory term for nodal fields
#
# dU is stored time-major: dU[i] = u_{i+1} - u_i (one row per step).  The
# L1 history at step k is sum_{j=1}^{k-1} b[j] * dU[k-1-j].


@njit
def l1_history_nb(b, dU, k):
    n = dU.shape[1]
    out = np.zeros(n)
    for j in range(1, k):
        bj = b[j]
        row = dU[k - 1 - j]
        for i in range(n):
            out[i] += bj * row[i]
    return out


def l1_history_np(b, dU, k):
    if k <= 1:
        return np.zeros(dU.shape[1])
    return b[1:k] @ dU[k - 2 :: -1][: k - 1]


# --------------------------------------------------------------------------
# tridiagonal solve (Thomas algorithm, SPD systems)


@njit
def tridiag_solve_nb(lower, diag, upper, rhs):
    n = diag.shape[0]
    c = np.empty(n)
    d = np.empty(n)
    c[0] = upper[0] / diag[0] if n > 1 else 0.0
    d[0] = rhs[0] / diag[0]
    for i in range(1, n):
        den = diag[i] - lower[i - 1] * c[i - 1]
        if i < n - 1:
            c[i] = upper[i] / den
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / den
    x = np.empty(n)
    x[n - 1] = d[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = d[i] - c[i] * x[i + 1]
    return x


def tridiag_solve_np(lower, diag, upper, rhs):
    from scipy.linalg import solve_banded

    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs)


if _accel.USE_NUMBA:
    causal_convolve = causal_convolve_nb
    volterra_history = volterra_history_nb
    volterra_convolve = volterra_convolve_nb
    l1_history = l1_history_nb
    tridiag_solve = tridiag_solve_nb
else:
    causal_convolve = causal_convolve_np
    volterra_history = volterra_history_np
    volterra_convolve = volterra_convolve_np
    l1_history = l1_history_np
    tridiag_solve = tridiag_solve_np
