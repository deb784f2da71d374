"""Forward and inverse solvers for time-fractional diffusion equations."""

from .mlf import MittagLefflerError, MlParams, gamma_fn, mittag_leffler, ml_decay, ml_kernel

__all__ = [
    "MittagLefflerError",
    "MlParams",
    "gamma_fn",
    "mittag_leffler",
    "ml_decay",
    "ml_kernel",
]
