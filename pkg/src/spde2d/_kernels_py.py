"""Pure-numpy fallback for the compiled kernels.

Same contracts as ``spde2d._kernels``: exact Ornstein-Uhlenbeck transition
recurrences and squared-increment sums.  The recurrence is vectorized over
modes with a Python-level loop over time steps, which is the best numpy can
do for a sequential recursion.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def exact_ou_recurrence(decay: np.ndarray, scale: np.ndarray, x0: np.ndarray,
                        z: np.ndarray) -> np.ndarray:
    """Run x[i] = decay*x[i-1] + scale*z[i-1] for a block of modes.

    Parameters
    ----------
    decay, scale : (m,) or (m, n) arrays
        Per-step transition factor e^{-lambda dt} and innovation standard
        deviation.  1-D inputs mean a uniform time grid.
    x0 : (m,) initial values.
    z : (m, n) standard normal draws.

    Returns
    -------
    (m, n+1) array of path values, column 0 equal to ``x0``.
    """
    z = np.ascontiguousarray(z, dtype=np.float64)
    m, n = z.shape
    out = np.empty((m, n + 1), dtype=np.float64)
    out[:, 0] = x0
    if decay.ndim == 1:
        for i in range(n):
            out[:, i + 1] = decay * out[:, i] + scale * z[:, i]
    else:
        for i in range(n):
            out[:, i + 1] = decay[:, i] * out[:, i] + scale[:, i] * z[:, i]
    return out


def sq_increment_sum(series: np.ndarray) -> np.ndarray:
    """Sum of squared consecutive increments along the last axis."""
    series = np.asarray(series, dtype=np.float64)
    d = np.diff(series, axis=-1)
    return np.einsum("...i,...i->...", d, d)
