"""Adaptive ML-type estimation of the (1,1) eigenvalue from the coordinate process.

The approximate coordinate process is a Riemann-sum projection of the field
onto one eigenfunction with plugged-in first-stage estimates.  The likelihood
contrasts use the exact Gaussian transition of the mode, written through
F(s) = s/(1-e^{-s}) for numerical stability; the residual sum is quadratic in
the per-step decay, so every contrast evaluation is O(1) after one pass over
the path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, EstimationError
from .qv import ThinnedTimeGrid
from .simulate import ObservationGrid

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def stable_f(s):
    """F(s) = s / (1 - e^{-s}), accurate down to s = 0 (F(0) = 1)."""
    s = np.asarray(s, dtype=float)
    denom = -np.expm1(-s)
    out = np.where(denom > 0.0, s / np.where(denom > 0.0, denom, 1.0), 1.0)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class ApproxCoordinatePath:
    """Projected mode values on the thinned time grid with the plugin used."""

    idx: tuple[int, int]
    times: np.ndarray
    values: np.ndarray
    plugin: tuple[float, float, float]  # (theta1_hat, eta1_hat, theta2_hat)


@dataclass(frozen=True)
class AsymptoticRegime:
    """Joint (n, epsilon) regime: B1 (n eps^2 -> 0) or B2 with c = lim (n eps^2)^{-1}."""

    kind: str  # "B1" | "B2"
    c: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("B1", "B2"):
            raise ConfigurationError(f"regime kind must be 'B1' or 'B2', got {self.kind!r}")
        if self.c < 0:
            raise ConfigurationError(f"regime constant c must be >= 0, got {self.c}")


@dataclass(frozen=True)
class VarianceReport:
    """Asymptotic-variance scalars and the implied standard errors.

    ``se_eps`` studentizes eps^{-1}-normalized errors; ``se_sqrtn``
    studentizes sqrt(n)-normalized errors (for Q2 the sqrt(n) entry refers to
    the mu component, whose limit variance is c-free).
    """

    variant: str
    g: float
    h: float
    i_total: float | None
    se_eps: float | None
    se_sqrtn: float | None


def projection_weights(m1: int, m2: int, plugin: tuple[float, float, float],
                       idx: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis Riemann weights of the projection sum over j = 1..M (boundary included)."""
    t1, e1, t2 = plugin
    if not t2 > 0:
        raise ConfigurationError(f"plugin theta2 must be positive, got {t2}")
    k, l = idx
    y = np.arange(1, m1 + 1) / m1
    z = np.arange(1, m2 + 1) / m2
    wy = np.sin(math.pi * k * y) * np.exp(t1 * y / (2.0 * t2))
    wz = np.sin(math.pi * l * z) * np.exp(e1 * z / (2.0 * t2))
    return wy, wz


def approximate_coordinate_values(field_at_times: np.ndarray, m1: int, m2: int,
                                  plugin: tuple[float, float, float],
                                  idx: tuple[int, int] = (1, 1)) -> np.ndarray:
    """(2/M) sum_{j1=1..M1} sum_{j2=1..M2} X(y_j1, z_j2) sin sin exp exp per time slice."""
    wy, wz = projection_weights(m1, m2, plugin, idx)
    block = field_at_times[:, 1:, 1:]
    return (2.0 / (m1 * m2)) * np.einsum("tij,i,j->t", block, wy, wz)


def approximate_coordinate(obs: ObservationGrid, times: ThinnedTimeGrid,
                           plugin: tuple[float, float, float],
                           idx: tuple[int, int] = (1, 1)) -> ApproxCoordinatePath:
    """Approximate coordinate process of mode ``idx`` on the thinned time grid."""
    if times.indices[-1] > obs.n_time:
        raise ConfigurationError("thinned times exceed the observation horizon")
    field_thin = obs.field[times.indices]
    vals = approximate_coordinate_values(field_thin, *obs.m_space, plugin, idx)
    return ApproxCoordinatePath(idx=idx, times=times.times.copy(), values=vals, plugin=tuple(plugin))


def _moments(values: np.ndarray) -> tuple[float, float, float, int]:
    """Sufficient statistics of the residual sum: S(lam) = A - 2 d B + d^2 C."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ConfigurationError("path must be 1-D with at least two values")
    a = float(np.dot(x[1:], x[1:]))
    b = float(np.dot(x[1:], x[:-1]))
    c = float(np.dot(x[:-1], x[:-1]))
    return a, b, c, x.size - 1


def residual_sum(values: np.ndarray, lam: float, dt: float) -> float:
    """sum_i (x_i - e^{-lam dt} x_{i-1})^2, evaluated through the quadratic form."""
    a, b, c, _ = _moments(values)
    d = math.exp(-lam * dt)
    return max(a - 2.0 * d * b + d * d * c, 0.0)


def contrast_v1(lam: float, values: np.ndarray, dt: float, epsilon: float, alpha: float) -> float:
    """Exact-transition contrast with the lambda-dependent damping (Q1 form)."""
    if not lam > 0 or not epsilon > 0:
        raise ConfigurationError("contrast_v1 needs lam > 0 and epsilon > 0")
    a, b, c, n = _moments(values)
    return _v1_from_moments(lam, a, b, c, n, dt, epsilon, alpha)


def _v1_from_moments(lam, a, b, c, n, dt, epsilon, alpha) -> float:
    fn = lam**alpha * stable_f(2.0 * lam * dt)
    d = math.exp(-lam * dt)
    s = max(a - 2.0 * d * b + d * d * c, 0.0)
    return fn * s / (epsilon**2 * dt) - n * math.log(fn)


def contrast_v2(lam: float, mu: float, values: np.ndarray, dt: float, epsilon: float,
                alpha: float) -> float:
    """Exact-transition contrast with the mu-damped noise (Q2 form)."""
    if not lam > 0 or not mu > 0 or not epsilon > 0:
        raise ConfigurationError("contrast_v2 needs lam > 0, mu > 0 and epsilon > 0")
    a, b, c, n = _moments(values)
    return _v2_from_moments(lam, mu, a, b, c, n, dt, epsilon, alpha)


def _v2_from_moments(lam, mu, a, b, c, n, dt, epsilon, alpha) -> float:
    fn = mu**alpha * stable_f(2.0 * lam * dt)
    d = math.exp(-lam * dt)
    s = max(a - 2.0 * d * b + d * d * c, 0.0)
    return fn * s / (epsilon**2 * dt) - n * math.log(fn)


def profiled_mu_alpha(lam: float, values: np.ndarray, dt: float, epsilon: float) -> float:
    """Closed-form minimizer of V2 in mu^alpha at fixed lambda:
    mu^alpha = n eps^2 (1 - e^{-2 lam dt}) / (2 lam S(lam))."""
    a, b, c, n = _moments(values)
    d = math.exp(-lam * dt)
    s = max(a - 2.0 * d * b + d * d * c, 0.0)
    if s == 0.0:
        raise EstimationError("zero residual sum: mu is unidentifiable")
    return n * epsilon**2 * (-np.expm1(-2.0 * lam * dt)) / (2.0 * lam * s)


@dataclass
class LambdaFit:
    """1-D contrast minimization result."""

    lam: float
    contrast: float
    clamped: bool
    coarse_index: int
    iterations: int


def _golden_min(fun, a: float, b: float, reltol: float) -> tuple[float, float, int]:
    """Deterministic golden-section minimization on [a, b]."""
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    it = 0
    while (b - a) > reltol * max(abs(a), abs(b), 1e-300):
        if fc <= fd:  # ties move left: smallest argument wins
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = fun(d)
        it += 1
        if it > 500:
            break
    x = 0.5 * (a + b)
    return x, fun(x), it


def _minimize_1d(fun, box: tuple[float, float], *, coarse_points: int = 128,
                 reltol: float = 1e-10) -> LambdaFit:
    lo, hi = box
    if not (lo > 0 and hi > lo):
        raise ConfigurationError(f"box must satisfy 0 < lo < hi, got {box}")
    grid = np.exp(np.linspace(math.log(lo), math.log(hi), coarse_points))
    vals = np.array([fun(x) for x in grid])
    if not np.any(np.isfinite(vals)):
        raise EstimationError("contrast is non-finite over the whole search grid")
    vals = np.where(np.isfinite(vals), vals, np.inf)
    j = int(np.argmin(vals))  # np.argmin returns the first (smallest-lambda) tie
    a = grid[max(j - 1, 0)]
    b = grid[min(j + 1, coarse_points - 1)]
    x, fx, it = _golden_min(fun, a, b, reltol)
    clamped = x <= lo * (1 + 1e-9) or x >= hi * (1 - 1e-9)
    return LambdaFit(lam=float(x), contrast=float(fx), clamped=clamped,
                     coarse_index=j, iterations=it)


def estimate_lambda_q1(values: np.ndarray, dt: float, epsilon: float, alpha: float,
                       box: tuple[float, float] = (1e-3, 1e3)) -> LambdaFit:
    """Adaptive ML-type estimator of the (1,1) eigenvalue under Q1 noise."""
    a, b, c, n = _moments(values)
    return _minimize_1d(lambda lam: _v1_from_moments(lam, a, b, c, n, dt, epsilon, alpha), box)


def estimate_lambda_mu_q2(values: np.ndarray, dt: float, epsilon: float, alpha: float,
                          lambda_box: tuple[float, float] = (1e-3, 1e3),
                          mu_box: tuple[float, float] = (1e-3, 1e3),
                          mu_known: float | None = None) -> tuple[LambdaFit, float, bool]:
    """Adaptive ML-type estimator of (lambda_{1,1}, mu_{1,1}) under Q2 noise.

    With ``mu_known`` the 1-D lambda problem is solved at that mu; otherwise
    mu^alpha is profiled out in closed form and the profiled contrast is
    minimized in lambda.  Returns (lambda fit, mu value, mu_clamped).
    """
    a, b, c, n = _moments(values)
    if mu_known is not None:
        if not mu_known > 0:
            raise ConfigurationError(f"mu_known must be positive, got {mu_known}")
        fit = _minimize_1d(
            lambda lam: _v2_from_moments(lam, mu_known, a, b, c, n, dt, epsilon, alpha),
            lambda_box,
        )
        return fit, float(mu_known), False

    log_neps = math.log(n * epsilon**2 * dt)

    def profiled(lam: float) -> float:
        d = math.exp(-lam * dt)
        s = a - 2.0 * d * b + d * d * c
        if s <= 0.0:
            raise EstimationError("zero residual sum: mu is unidentifiable")
        return n + n * math.log(s) - n * log_neps

    fit = _minimize_1d(profiled, lambda_box)
    u = profiled_mu_alpha(fit.lam, values, dt, epsilon)
    mu = u ** (1.0 / alpha)
    mu_cl = min(max(mu, mu_box[0]), mu_box[1])
    return fit, float(mu_cl), mu_cl != mu


def recover_theta0(lambda_hat: float, plugin: tuple[float, float, float]) -> float:
    """theta0 = -lambda_{1,1} + (theta1^2 + eta1^2)/(4 theta2) + 2 pi^2 theta2."""
    t1, e1, t2 = plugin
    if not t2 > 0:
        raise ConfigurationError(f"plugin theta2 must be positive, got {t2}")
    return -lambda_hat + (t1**2 + e1**2) / (4.0 * t2) + 2.0 * math.pi**2 * t2


def recover_mu0(mu_hat: float) -> float:
    """mu0 = mu_{1,1} - 2 pi^2."""
    return mu_hat - 2.0 * math.pi**2


def asymptotic_variance(variant: str, regime: AsymptoticRegime, lam: float, alpha: float,
                        x0: float, mu: float | None = None) -> VarianceReport:
    """G/H/I variance scalars and regime-appropriate standard errors.

    Q1: G1 = (1-e^{-2 lam})/(2 lam^{1-alpha}) x0^2, H1 = alpha^2/(2 lam^2),
        I1 = H1 + c G1; se(eps^{-1} err) = G1^{-1/2}, se(sqrt(n) err) = I1^{-1/2}.
    Q2: G2 = (1-e^{-2 lam})/(2 lam) mu^alpha x0^2, H2 = alpha^2/(2 mu^2);
        se(eps^{-1} err) = G2^{-1/2} (lambda part), se(sqrt(n) err) = H2^{-1/2} (mu part).
    """
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    g_needed = regime.kind == "B1" or regime.c > 0 or variant == "Q2"
    if x0 == 0.0 and g_needed:
        raise EstimationError("x(0) = 0 makes the G-variance degenerate")
    span = -math.expm1(-2.0 * lam)
    if variant == "Q1":
        g = span / (2.0 * lam ** (1.0 - alpha)) * x0**2
        h = alpha**2 / (2.0 * lam**2)
        i_total = h + regime.c * g
        se_eps = g ** -0.5 if g > 0 else None
        se_sqrtn = i_total ** -0.5
    elif variant == "Q2":
        if mu is None or not mu > 0:
            raise ConfigurationError(f"Q2 variance needs mu > 0, got {mu}")
        g = span / (2.0 * lam) * mu**alpha * x0**2
        h = alpha**2 / (2.0 * mu**2)
        i_total = None
        se_eps = g ** -0.5 if g > 0 else None
        se_sqrtn = h ** -0.5
    else:
        raise ConfigurationError(f"unknown variant {variant!r}")
    return VarianceReport(variant=variant, g=g, h=h, i_total=i_total,
                          se_eps=se_eps, se_sqrtn=se_sqrtn)
