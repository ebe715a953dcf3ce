"""Independent closed-form oracles used by the test suite.

These deliberately avoid the library's simulation path: expectations of the
quadratic-variation statistic are assembled from per-mode transition-variance
identities and the deterministic semigroup decay, so they can certify what
the Monte Carlo simulator should produce on average.
"""
from __future__ import annotations

import numpy as np

from spde2d.model import InitialField, NoiseSpec, SpdeParams, initial_coefficient_table
from spde2d.simulate import mode_tables


def qv_noise_expectation(params: SpdeParams, noise: NoiseSpec, epsilon: float,
                         n_obs: int, pt: tuple[float, float], kmax: int) -> float:
    """Noise part of E[sum_i (Delta_i X)^2(pt)] summed over modes (k,l) <= kmax.

    Per mode the increment variance is (1-a)^2 Var x(t_{i-1}) + eps^2 d^2
    (1-a^2)/(2 lam) with a = e^{-lam/N}; the time sum has a closed geometric
    form.
    """
    lam, damp = mode_tables(params, noise, kmax)
    a = np.exp(-lam / n_obs)
    var_inf = epsilon**2 * damp**2 / (2.0 * lam)
    geo = (1.0 - a ** (2 * n_obs)) / (1.0 - a**2)
    time_sum = (1.0 - a) ** 2 * var_inf * (n_obs - geo) + n_obs * var_inf * (1.0 - a**2)
    k = np.arange(1, kmax + 1)
    ey = np.sqrt(2.0) * np.sin(np.pi * k * pt[0]) * np.exp(-params.theta1 * pt[0] / (2 * params.theta2))
    ez = np.sqrt(2.0) * np.sin(np.pi * k * pt[1]) * np.exp(-params.eta1 * pt[1] / (2 * params.theta2))
    e2 = np.outer(ey, ez) ** 2
    return float(np.sum(e2 * time_sum))


def qv_drift_expectation(params: SpdeParams, xi: InitialField, n_obs: int,
                         pt: tuple[float, float], kmax: int = 160) -> float:
    """Deterministic part sum_i (u(t_i) - u(t_{i-1}))^2 at pt (u = semigroup image)."""
    x0 = initial_coefficient_table(params, xi, kmax)
    lam, _ = mode_tables(params, NoiseSpec("Q1", 0.5), kmax)
    k = np.arange(1, kmax + 1)
    ey = np.sqrt(2.0) * np.sin(np.pi * k * pt[0]) * np.exp(-params.theta1 * pt[0] / (2 * params.theta2))
    ez = np.sqrt(2.0) * np.sin(np.pi * k * pt[1]) * np.exp(-params.eta1 * pt[1] / (2 * params.theta2))
    coef = (x0 * np.outer(ey, ez)).ravel()
    lam_flat = lam.ravel()
    keep = np.abs(coef) > 1e-16
    coef, lam_flat = coef[keep], lam_flat[keep]
    t = np.arange(n_obs + 1) / n_obs
    u = np.zeros(n_obs + 1)
    for i in range(0, coef.size, 1024):
        u += coef[i:i + 1024] @ np.exp(-np.outer(lam_flat[i:i + 1024], t))
    return float(np.sum(np.diff(u) ** 2))


def expected_z_mean(params: SpdeParams, noise: NoiseSpec, xi: InitialField, epsilon: float,
                    n_obs: int, pt: tuple[float, float], kmax: int,
                    drift_kmax: int = 160) -> float:
    """Exact E[eps^{-2} Z_N(pt)] for data truncated at kmax modes per axis."""
    total = (qv_noise_expectation(params, noise, epsilon, n_obs, pt, kmax)
             + qv_drift_expectation(params, xi, n_obs, pt, drift_kmax))
    return epsilon**-2 * n_obs ** (noise.alpha - 1.0) * total


def stationary_tail(params: SpdeParams, noise: NoiseSpec, epsilon: float,
                    k_trunc: int, cap: int = 2048) -> float:
    """Brute-force omitted-tail stationary variance sum_{k or l > K} eps^2 d^2/(2 lam)."""
    lam, damp = mode_tables(params, noise, cap)
    terms = epsilon**2 * damp**2 / (2.0 * lam)
    inner = terms[:k_trunc, :k_trunc].sum()
    return float(terms.sum() - inner)
