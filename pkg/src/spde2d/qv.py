"""Temporal quadratic-variation statistics and the thinned observation grids."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import ConfigurationError


def z_statistic(series: np.ndarray, alpha: float) -> float:
    """Normalized sum of squared time increments: N^{alpha-1} * sum (X_i - X_{i-1})^2.

    ``series`` holds the field values at one space point over the full time
    grid 0..N.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or series.size < 2:
        raise ConfigurationError("series must be 1-D with at least two observations")
    n = series.size - 1
    return float(n ** (alpha - 1.0) * backend.sq_increment_sum(series[None, :])[0])


def z_statistic_batch(series: np.ndarray, alpha: float) -> np.ndarray:
    """z_statistic along the last axis of a stack of series."""
    series = np.asarray(series, dtype=float)
    if series.shape[-1] < 2:
        raise ConfigurationError("series must have at least two observations")
    n = series.shape[-1] - 1
    return n ** (alpha - 1.0) * backend.sq_increment_sum(series)


@dataclass(frozen=True)
class ThinnedSpaceGrid:
    """Interior coarse sub-grid of the observation grid inside [delta, 1-delta]^2."""

    delta: float
    j1_indices: np.ndarray  # observation-grid indices along y
    j2_indices: np.ndarray
    ytilde: np.ndarray
    ztilde: np.ndarray

    @property
    def m1(self) -> int:
        return self.j1_indices.size

    @property
    def m2(self) -> int:
        return self.j2_indices.size


def _thin_axis(m_obs: int, m_bar: int, delta: float) -> np.ndarray:
    """Indices of the coarse points strictly inside the margin on one axis.

    Coarse points are floor(M/m_bar) * j / M for j = 0..m_bar; the run kept is
    the maximal consecutive block inside [delta, 1-delta], starting just above
    the margin.
    """
    step = m_obs // m_bar
    j = np.arange(m_bar + 1)
    coords = step * j / m_obs
    inside = (coords >= delta) & (coords <= 1.0 - delta)
    if not inside.any():
        raise ConfigurationError(
            f"no coarse grid point inside [{delta}, {1 - delta}] (step {step}/{m_obs})"
        )
    first = int(np.argmax(inside))
    last = int(len(inside) - 1 - np.argmax(inside[::-1]))
    return step * j[first:last + 1]


def build_thinned_space_grid(m1_obs: int, m2_obs: int, m_bar1: int, m_bar2: int,
                             delta: float) -> ThinnedSpaceGrid:
    """Thinned spatial grid; every kept point is an exact observation-grid point."""
    if not 0.0 < delta < 0.5:
        raise ConfigurationError(f"delta must lie in (0, 1/2), got {delta}")
    for m_obs, m_bar in ((m1_obs, m_bar1), (m2_obs, m_bar2)):
        if not 1 <= m_bar <= m_obs:
            raise ConfigurationError(f"need 1 <= m_bar <= M, got m_bar={m_bar}, M={m_obs}")
    j1 = _thin_axis(m1_obs, m_bar1, delta)
    j2 = _thin_axis(m2_obs, m_bar2, delta)
    return ThinnedSpaceGrid(
        delta=delta, j1_indices=j1, j2_indices=j2,
        ytilde=j1 / m1_obs, ztilde=j2 / m2_obs,
    )


@dataclass(frozen=True)
class ThinnedTimeGrid:
    """Sub-grid of the observation times with constant spacing dt = floor(N/n)/N."""

    n: int
    step: int
    times: np.ndarray
    indices: np.ndarray
    dt: float


def build_thinned_time_grid(n_obs: int, n: int) -> ThinnedTimeGrid:
    """Thinned times t_i = floor(N/n) * i / N for i = 0..n."""
    if not 1 <= n <= n_obs:
        raise ConfigurationError(f"need 1 <= n <= N, got n={n}, N={n_obs}")
    step = n_obs // n
    indices = step * np.arange(n + 1)
    times = indices / n_obs
    return ThinnedTimeGrid(n=n, step=step, times=times, indices=indices, dt=step / n_obs)


def limit_surface(theta1: float, eta1: float, theta2: float, alpha: float,
                  variant: str, y, z):
    """Deterministic limit of eps^{-2} Z_N at (y, z) for the chosen noise variant.

    Q1: Gamma(1-alpha) / (4 pi alpha theta2)       * e^{-theta1 y/theta2 - eta1 z/theta2}
    Q2: Gamma(1-alpha) / (4 pi alpha theta2^{1-a}) * same exponential surface
    """
    if not theta2 > 0:
        raise ConfigurationError(f"theta2 must be positive, got {theta2}")
    denom = theta2 if variant == "Q1" else theta2 ** (1.0 - alpha)
    amp = math.gamma(1.0 - alpha) / (4.0 * math.pi * alpha * denom)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    out = amp * np.exp(-theta1 * y / theta2 - eta1 * z / theta2)
    return out if out.ndim else float(out)
