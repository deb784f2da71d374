"""Optional numba acceleration.

Hot loops are written twice: a ``@njit`` kernel and a vectorised numpy
counterpart.  The numba kernels are used when numba imports and the
environment variable ``FRACINV_DISABLE_NUMBA`` is unset (or falsy).
"""

from __future__ import annotations

import os

_FLAG = "FRACINV_DISABLE_NUMBA"


def _disabled() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    if _disabled():
        raise ImportError(f"{_FLAG} is set")
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:
    _numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA


def njit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when available, otherwise a no-op."""

    def wrap(f):
        if _numba is None:
            return f
        return _numba.njit(cache=True, **kwargs)(f)

    if func is not None:
        return wrap(func)
    return wrap


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
