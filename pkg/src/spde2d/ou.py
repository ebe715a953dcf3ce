"""Small-noise Ornstein-Uhlenbeck laboratory, independent of the field pipeline.

Case 1 puts the rate parameter in both the drift and the noise damping
(damping lambda^{-alpha/2}); Case 2 uses a separate damping parameter mu
that may be known or jointly estimated.  Contrast evaluation and
minimization delegate to :mod:`spde2d.ml` so there is a single numerical
truth for F and the transition likelihood.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend, ml
from .errors import ConfigurationError
from .simulate import CoordinatePath, transition_scale

CASE1 = 1
CASE2 = 2


@dataclass(frozen=True)
class OuModel:
    """Model spec: dx = -lambda x dt + eps * damping dW on t in [0,1], n steps."""

    case: int
    lam: float
    epsilon: float
    alpha: float
    x0: float
    n: int
    mu: float | None = None

    def __post_init__(self) -> None:
        if self.case not in (CASE1, CASE2):
            raise ConfigurationError(f"case must be 1 or 2, got {self.case}")
        if not self.lam > 0:
            raise ConfigurationError(f"lambda must be positive, got {self.lam}")
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigurationError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.x0 == 0.0:
            raise ConfigurationError("x0 must be nonzero")
        if self.n < 1:
            raise ConfigurationError(f"n must be >= 1, got {self.n}")
        if self.case == CASE2 and (self.mu is None or not self.mu > 0):
            raise ConfigurationError(f"case 2 needs mu > 0, got {self.mu}")

    @property
    def damping_base(self) -> float:
        return self.lam if self.case == CASE1 else float(self.mu)

    @property
    def damping(self) -> float:
        return self.damping_base ** (-self.alpha / 2.0)


def ou_stream(seed: int, replicate: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=seed,
                                                                       spawn_key=(replicate,))))


def simulate_ou(model: OuModel, seed: int, replicate: int = 0) -> CoordinatePath:
    """Exact transition sampling on the uniform grid t_i = i/n."""
    rng = ou_stream(seed, replicate)
    values = simulate_ou_batch(model, rng, 1)[0]
    times = np.arange(model.n + 1) / model.n
    return CoordinatePath(idx=(1, 1), times=times, values=values)


def simulate_ou_batch(model: OuModel, rng: np.random.Generator, replicates: int) -> np.ndarray:
    """(replicates, n+1) array of independent exact paths from one stream."""
    dt = 1.0 / model.n
    decay = np.full(replicates, np.exp(-model.lam * dt))
    scale = np.full(replicates, model.epsilon * transition_scale(model.lam, model.damping, dt))
    x0 = np.full(replicates, model.x0)
    z = rng.standard_normal((replicates, model.n))
    return backend.exact_ou_recurrence(decay, scale, x0, z)


def estimate_case1(values: np.ndarray, epsilon: float, alpha: float,
                   box: tuple[float, float] = (1e-3, 1e3),
                   regime: ml.AsymptoticRegime | None = None,
                   x0: float | None = None) -> tuple[ml.LambdaFit, ml.VarianceReport]:
    """Estimate lambda for Case 1 and report G1/H1/I1-based standard errors."""
    values = np.asarray(values, dtype=float)
    n = values.size - 1
    fit = ml.estimate_lambda_q1(values, 1.0 / n, epsilon, alpha, box)
    if regime is None:
        regime = ml.AsymptoticRegime("B2", c=1.0 / (n * epsilon**2))
    x0v = float(values[0]) if x0 is None else x0
    report = ml.asymptotic_variance("Q1", regime, fit.lam, alpha, x0v)
    return fit, report


def estimate_case2(values: np.ndarray, epsilon: float, alpha: float,
                   lambda_box: tuple[float, float] = (1e-3, 1e3),
                   mu_box: tuple[float, float] = (1e-3, 1e3),
                   mu_known: float | None = None,
                   regime: ml.AsymptoticRegime | None = None,
                   x0: float | None = None) -> tuple[ml.LambdaFit, float, ml.VarianceReport]:
    """Estimate (lambda, mu) for Case 2; returns (lambda fit, mu, variance report)."""
    values = np.asarray(values, dtype=float)
    n = values.size - 1
    fit, mu, _ = ml.estimate_lambda_mu_q2(values, 1.0 / n, epsilon, alpha,
                                          lambda_box, mu_box, mu_known)
    if regime is None:
        regime = ml.AsymptoticRegime("B2", c=1.0 / (n * epsilon**2))
    x0v = float(values[0]) if x0 is None else x0
    report = ml.asymptotic_variance("Q2", regime, fit.lam, alpha, x0v, mu=mu)
    return fit, mu, report
