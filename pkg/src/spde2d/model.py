"""Operator parameterization: eigenpairs, weighted inner product, initial fields.

The second-order operator acting on [0,1]^2 with Dirichlet boundary is
diagonalized by products of sines with exponential tilts; everything in this
module is the algebra of that eigen-system plus Gauss-Legendre quadrature for
the exponentially weighted L2 inner product.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigurationError, NumericError

PI2 = math.pi * math.pi

Q1 = "Q1"
Q2 = "Q2"


@dataclass(frozen=True)
class SpdeParams:
    """Coefficient vector (theta0, theta1, eta1, theta2) with theta2 > 0.

    The constructor also rejects parameter vectors whose lowest eigenvalue
    lambda_{1,1} is not strictly positive, since the mild solution and every
    estimator downstream require it.
    """

    theta0: float
    theta1: float
    eta1: float
    theta2: float

    def __post_init__(self) -> None:
        if not self.theta2 > 0:
            raise ConfigurationError(f"theta2 must be positive, got {self.theta2}")
        lam = eigenvalue(self, (1, 1))
        if not lam > 0:
            raise ConfigurationError(
                f"lambda_(1,1) = {lam} must be positive for params {self}"
            )

    @property
    def lambda11(self) -> float:
        return eigenvalue(self, (1, 1))


@dataclass(frozen=True)
class NoiseSpec:
    """Driving-noise variant: Q1 (eigenvalue damping) or Q2 (theta-free damping).

    ``alpha`` in (0,1) sets the damping exponent; ``mu0`` (> -2*pi^2) shifts
    the Q2 damping spectrum and is ignored for Q1.
    """

    variant: str
    alpha: float
    mu0: float | None = None

    def __post_init__(self) -> None:
        if self.variant not in (Q1, Q2):
            raise ConfigurationError(f"variant must be 'Q1' or 'Q2', got {self.variant!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie strictly in (0,1), got {self.alpha}")
        if self.variant == Q2:
            if self.mu0 is None:
                raise ConfigurationError("Q2 noise requires mu0")
            if not self.mu0 > -2.0 * PI2:
                raise ConfigurationError(
                    f"mu0 must exceed -2*pi^2 ~ {-2*PI2:.4f}, got {self.mu0}"
                )


def check_eigen_index(idx: tuple[int, int]) -> tuple[int, int]:
    k, l = idx
    if k < 1 or l < 1 or k != int(k) or l != int(l):
        raise ConfigurationError(f"eigen index must be a pair of positive integers, got {idx}")
    return int(k), int(l)


def eigenvalue(params: SpdeParams, idx: tuple[int, int]) -> float:
    """lambda_{k,l} = -theta0 + (theta1^2+eta1^2)/(4 theta2) + pi^2 (k^2+l^2) theta2."""
    k, l = check_eigen_index(idx)
    return (
        -params.theta0
        + (params.theta1**2 + params.eta1**2) / (4.0 * params.theta2)
        + PI2 * (k * k + l * l) * params.theta2
    )


def eigenfunction_at(params: SpdeParams, idx: tuple[int, int], y, z):
    """e_{k,l}(y,z) = 2 sin(pi k y) sin(pi l z) e^{-theta1 y/(2 theta2)} e^{-eta1 z/(2 theta2)}."""
    k, l = check_eigen_index(idx)
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    out = (
        2.0
        * np.sin(math.pi * k * y)
        * np.sin(math.pi * l * z)
        * np.exp(-params.theta1 * y / (2.0 * params.theta2))
        * np.exp(-params.eta1 * z / (2.0 * params.theta2))
    )
    return out if out.ndim else float(out)


def mu_value(noise: NoiseSpec, idx: tuple[int, int]) -> float:
    """mu_{k,l} = pi^2 (k^2 + l^2) + mu0; only defined for the Q2 variant."""
    if noise.variant != Q2:
        raise ConfigurationError("mu_value is defined for the Q2 variant only")
    k, l = check_eigen_index(idx)
    return PI2 * (k * k + l * l) + float(noise.mu0)


def noise_damping(noise: NoiseSpec, params: SpdeParams, idx: tuple[int, int]) -> float:
    """Mode damping factor of the driving noise: lambda^{-alpha/2} or mu^{-alpha/2}."""
    if noise.variant == Q1:
        lam = eigenvalue(params, idx)
        if lam <= 0:
            raise ConfigurationError(f"Q1 damping needs lambda_{idx} > 0, got {lam}")
        return lam ** (-noise.alpha / 2.0)
    return mu_value(noise, idx) ** (-noise.alpha / 2.0)


@lru_cache(maxsize=32)
def gauss_legendre_01(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights mapped to [0, 1]."""
    x, w = leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def inner_product(params: SpdeParams, f: Callable, g: Callable, order: int = 64) -> float:
    """Weighted inner product <f,g> = int f g e^{theta1 y/theta2} e^{eta1 z/theta2} dy dz.

    Tensor-product Gauss-Legendre quadrature with ``order`` points per axis;
    the integrands in this model are smooth, so convergence is spectral.
    """
    ynod, wy = gauss_legendre_01(order)
    znod, wz = gauss_legendre_01(order)
    yy, zz = np.meshgrid(ynod, znod, indexing="ij")
    vals = (
        np.asarray(f(yy, zz), dtype=float)
        * np.asarray(g(yy, zz), dtype=float)
        * np.exp(params.theta1 * yy / params.theta2)
        * np.exp(params.eta1 * zz / params.theta2)
    )
    if not np.all(np.isfinite(vals)):
        raise NumericError("non-finite integrand in inner_product")
    return float(wy @ vals @ wz)


@dataclass(frozen=True)
class InitialField:
    """Deterministic initial condition: a scalar evaluator on [0,1]^2 plus a tag.

    The evaluator must vanish on the boundary and have a nonzero (1,1)
    coefficient for the parameters in use; :func:`validate_initial_field`
    checks both.  Square-integrability of the operator image is a caller
    obligation (not checkable for arbitrary callables).
    """

    evaluator: Callable = field(repr=False)
    description: str = "custom"


def polynomial_initial_field(amplitude: float = 30.0) -> InitialField:
    """The bump amplitude * y(1-y) z(1-z), vanishing on the boundary."""
    def ev(y, z):
        y = np.asarray(y, dtype=float)
        z = np.asarray(z, dtype=float)
        return amplitude * y * (1.0 - y) * z * (1.0 - z)

    return InitialField(ev, f"poly:{amplitude:g}")


def single_mode_initial_field(params: SpdeParams, coefficient: float = 1.0) -> InitialField:
    """coefficient * e_{1,1} for the given parameters (exactly one nonzero mode)."""
    def ev(y, z):
        return coefficient * eigenfunction_at(params, (1, 1), y, z)

    return InitialField(ev, f"single_mode:{coefficient:g}")


def initial_coefficient(params: SpdeParams, xi: InitialField, idx: tuple[int, int],
                        order: int = 64) -> float:
    """<xi, e_{k,l}> under the weighted inner product."""
    k, l = check_eigen_index(idx)
    return inner_product(params, xi.evaluator,
                         lambda y, z: eigenfunction_at(params, (k, l), y, z), order=order)


def initial_coefficient_table(params: SpdeParams, xi: InitialField, kmax: int,
                              order: int | None = None) -> np.ndarray:
    """All <xi, e_{k,l}> for k,l = 1..kmax as a (kmax, kmax) array.

    The quadrature order scales with ``kmax`` so the highest sine mode stays
    resolved (a fixed rule would alias everything past its Nyquist index).
    """
    if xi.description.startswith("single_mode:"):
        # exact by construction: orthonormality of the eigenfunctions
        coef = float(xi.description.split(":", 1)[1])
        table = np.zeros((kmax, kmax))
        table[0, 0] = coef
        return table
    if order is None:
        order = max(128, 2 * kmax + 32)
    ynod, wy = gauss_legendre_01(order)
    znod, wz = gauss_legendre_01(order)
    yy, zz = np.meshgrid(ynod, znod, indexing="ij")
    vals = np.asarray(xi.evaluator(yy, zz), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise NumericError("non-finite initial field values")
    # net per-axis weight of eigenfunction times the inner-product weight
    ks = np.arange(1, kmax + 1)
    sy = np.sqrt(2.0) * np.sin(math.pi * np.outer(ks, ynod)) \
        * np.exp(params.theta1 * ynod / (2.0 * params.theta2))[None, :]
    sz = np.sqrt(2.0) * np.sin(math.pi * np.outer(ks, znod)) \
        * np.exp(params.eta1 * znod / (2.0 * params.theta2))[None, :]
    return (sy * wy[None, :]) @ vals @ (sz * wz[None, :]).T


def validate_initial_field(params: SpdeParams, xi: InitialField, *,
                           boundary_tol: float = 1e-9, quad_order: int = 64,
                           boundary_samples: int = 33) -> float:
    """Check the Dirichlet boundary condition and the nonzero (1,1) coefficient.

    Returns the (1,1) coefficient; raises ConfigurationError on violation.
    """
    s = np.linspace(0.0, 1.0, boundary_samples)
    zeros = np.zeros_like(s)
    ones = np.ones_like(s)
    for yb, zb in ((zeros, s), (ones, s), (s, zeros), (s, ones)):
        vals = np.asarray(xi.evaluator(yb, zb), dtype=float)
        if np.max(np.abs(vals)) > boundary_tol:
            raise ConfigurationError(
                f"initial field {xi.description!r} does not vanish on the boundary "
                f"(max |value| = {np.max(np.abs(vals)):.3e})"
            )
    c11 = initial_coefficient(params, xi, (1, 1), order=quad_order)
    if abs(c11) < 1e-12:
        raise ConfigurationError(
            f"initial field {xi.description!r} has vanishing (1,1) coefficient"
        )
    return c11


def theta0_from_lambda(lambda11: float, theta1: float, eta1: float, theta2: float) -> float:
    """Invert the (1,1) eigenvalue for theta0 at given first-order coefficients."""
    if not theta2 > 0:
        raise ConfigurationError(f"theta2 must be positive, got {theta2}")
    return -lambda11 + (theta1**2 + eta1**2) / (4.0 * theta2) + 2.0 * PI2 * theta2
