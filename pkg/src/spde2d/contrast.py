"""Minimum-contrast estimation of (theta1, eta1, theta2) from the spatial QV surface.

The contrast matches eps^{-2} Z_N on the thinned spatial grid against the
limit surface a * e^{-kappa y - eta z}.  The amplitude enters linearly, so it
is profiled out in closed form (separable least squares); the remaining 2-D
shape problem is solved by a deterministic coarse grid scan followed by
Nelder-Mead refinement, then mapped back to the physical parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import ConfigurationError, EstimationError
from .qv import ThinnedSpaceGrid


@dataclass(frozen=True)
class SpatialContrastInput:
    """eps^{-2} Z_N values over the thinned grid plus the grid/noise metadata."""

    zvals: np.ndarray  # (m1, m2)
    grid: ThinnedSpaceGrid
    alpha: float
    epsilon: float
    variant: str

    def __post_init__(self) -> None:
        zv = np.asarray(self.zvals, dtype=float)
        if zv.shape != (self.grid.m1, self.grid.m2):
            raise ConfigurationError(
                f"zvals shape {zv.shape} does not match grid ({self.grid.m1}, {self.grid.m2})"
            )
        if np.any(zv < 0):
            raise ConfigurationError("zvals must be nonnegative")


@dataclass(frozen=True)
class SearchBox:
    """Closed parameter intervals standing in for the compact parameter space."""

    theta1: tuple[float, float]
    eta1: tuple[float, float]
    theta2: tuple[float, float]

    def __post_init__(self) -> None:
        for name, (lo, hi) in (("theta1", self.theta1), ("eta1", self.eta1),
                               ("theta2", self.theta2)):
            if lo > hi:
                raise ConfigurationError(f"{name} interval is empty: {lo} > {hi}")
        if not self.theta2[0] > 0:
            raise ConfigurationError("theta2 interval must lie inside (0, inf)")


@dataclass
class SpatialFit:
    """Result of the spatial contrast minimization."""

    theta1: float
    eta1: float
    theta2: float
    kappa: float
    eta: float
    amplitude: float
    contrast: float
    clamped: bool
    coarse_seed: tuple[float, float]
    coarse_ties: int
    nm_iterations: int
    converged: bool


def surface_amplitude(variant: str, alpha: float, theta2: float) -> float:
    """Amplitude of the limit surface: Gamma(1-alpha)/(4 pi alpha theta2^{p}),
    p = 1 for Q1 and 1-alpha for Q2."""
    p = 1.0 if variant == "Q1" else 1.0 - alpha
    return math.gamma(1.0 - alpha) / (4.0 * math.pi * alpha * theta2**p)


def theta2_from_amplitude(variant: str, alpha: float, amplitude: float) -> float:
    """Inverse of :func:`surface_amplitude` in theta2."""
    if not amplitude > 0:
        raise EstimationError(f"amplitude must be positive, got {amplitude}")
    base = math.gamma(1.0 - alpha) / (4.0 * math.pi * alpha * amplitude)
    return base if variant == "Q1" else base ** (1.0 / (1.0 - alpha))


def params_to_shape(variant: str, alpha: float, theta1: float, eta1: float,
                    theta2: float) -> tuple[float, float, float]:
    """(theta1, eta1, theta2) -> (amplitude, kappa, eta)."""
    return surface_amplitude(variant, alpha, theta2), theta1 / theta2, eta1 / theta2


def shape_to_params(variant: str, alpha: float, amplitude: float, kappa: float,
                    eta: float) -> tuple[float, float, float]:
    """(amplitude, kappa, eta) -> (theta1, eta1, theta2)."""
    theta2 = theta2_from_amplitude(variant, alpha, amplitude)
    return kappa * theta2, eta * theta2, theta2


def contrast_u(inp: SpatialContrastInput, theta1: float, eta1: float, theta2: float) -> float:
    """Sum of squared deviations of eps^{-2} Z_N from the limit surface."""
    if not theta2 > 0:
        raise ConfigurationError(f"theta2 must be positive, got {theta2}")
    amp = surface_amplitude(inp.variant, inp.alpha, theta2)
    surf = amp * np.exp(
        -np.add.outer(theta1 * inp.grid.ytilde, eta1 * inp.grid.ztilde) / theta2
    )
    r = np.asarray(inp.zvals, dtype=float) - surf
    return float(np.sum(r * r))


def _profiled(inp: SpatialContrastInput):
    """Return f(kappa, eta) -> (residual sum, profiled amplitude)."""
    zv = np.asarray(inp.zvals, dtype=float)

    def fun(kappa: float, eta: float) -> tuple[float, float]:
        w = np.exp(-np.add.outer(kappa * inp.grid.ytilde, eta * inp.grid.ztilde))
        denom = float(np.sum(w * w))
        a = float(np.sum(zv * w)) / denom
        r = zv - a * w
        return float(np.sum(r * r)), a

    return fun


def minimize_contrast(inp: SpatialContrastInput, box: SearchBox, *,
                      coarse_halfwidth: float = 10.0, coarse_points: int = 21,
                      nm_maxiter: int = 400, nm_xatol: float = 1e-10,
                      nm_fatol: float = 1e-14, tie_tol: float = 1e-12) -> SpatialFit:
    """Minimize the spatial contrast via profiled separable least squares.

    Needs at least 3 grid points spanning both axes so the amplitude and both
    exponential slopes are identifiable.
    """
    g = inp.grid
    if g.m1 * g.m2 < 3 or (g.m1 < 2 and g.m2 < 2):
        raise EstimationError("need >= 3 spatial points spanning both axes")
    fun = _profiled(inp)

    grid1d = np.linspace(-coarse_halfwidth, coarse_halfwidth, coarse_points)
    best_val = math.inf
    best_ke = (grid1d[0], grid1d[0])
    ties = 0
    for kappa in grid1d:          # ascending scan makes the lexicographic
        for eta in grid1d:        # tie-break implicit: first strict improvement wins
            val, _ = fun(kappa, eta)
            if val < best_val - tie_tol:
                best_val, best_ke, ties = val, (kappa, eta), 0
            elif abs(val - best_val) <= tie_tol:
                ties += 1

    res = minimize(lambda p: fun(p[0], p[1])[0], x0=np.array(best_ke),
                   method="Nelder-Mead",
                   options={"maxiter": nm_maxiter, "xatol": nm_xatol, "fatol": nm_fatol})
    kappa, eta = float(res.x[0]), float(res.x[1])
    _, a = fun(kappa, eta)
    if not a > 0:
        raise EstimationError(f"profiled amplitude {a} is not positive")

    theta1, eta1, theta2 = shape_to_params(inp.variant, inp.alpha, a, kappa, eta)
    clamped = False
    for name, val, (lo, hi) in (("theta1", theta1, box.theta1),
                                ("eta1", eta1, box.eta1),
                                ("theta2", theta2, box.theta2)):
        cl = min(max(val, lo), hi)
        if cl != val:
            clamped = True
        if name == "theta1":
            theta1 = cl
        elif name == "eta1":
            eta1 = cl
        else:
            theta2 = cl
    value = contrast_u(inp, theta1, eta1, theta2)
    return SpatialFit(
        theta1=theta1, eta1=eta1, theta2=theta2, kappa=kappa, eta=eta,
        amplitude=a, contrast=value, clamped=clamped, coarse_seed=best_ke,
        coarse_ties=ties, nm_iterations=int(res.nit), converged=bool(res.success),
    )
