"""Flat key-value experiment configuration.

Files hold ``section.key = value`` lines (``#`` comments, blank lines
allowed); the same dotted keys can be passed programmatically as a dict.
Typed accessors raise ConfigurationError with the offending key so the CLI
can exit with the config-error code.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigurationError
from .model import (
    InitialField,
    NoiseSpec,
    SpdeParams,
    polynomial_initial_field,
    single_mode_initial_field,
)
from .ou import OuModel
from .simulate import TruncationPolicy


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"line {lineno}: empty key")
        out[key] = val
    return out


def load_config(path) -> dict[str, str]:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


class _View:
    """Typed accessors over the flat dict."""

    def __init__(self, raw: dict[str, str]):
        self.raw = dict(raw)

    def _get(self, key: str, default=None, required: bool = False) -> str | None:
        if key in self.raw:
            return self.raw[key]
        if required:
            raise ConfigurationError(f"missing required config key {key!r}")
        return default

    def str_(self, key: str, default: str | None = None, required: bool = False):
        return self._get(key, default, required)

    def float_(self, key: str, default: float | None = None, required: bool = False):
        val = self._get(key, None, required)
        if val is None:
            return default
        try:
            return float(val)
        except ValueError as exc:
            raise ConfigurationError(f"config key {key!r}: not a number: {val!r}") from exc

    def int_(self, key: str, default: int | None = None, required: bool = False):
        val = self._get(key, None, required)
        if val is None:
            return default
        try:
            return int(val)
        except ValueError as exc:
            raise ConfigurationError(f"config key {key!r}: not an integer: {val!r}") from exc

    def bool_(self, key: str, default: bool = False):
        val = self._get(key)
        if val is None:
            return default
        low = val.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigurationError(f"config key {key!r}: not a boolean: {val!r}")

    def floats_(self, key: str) -> list[float]:
        val = self._get(key)
        if val is None:
            return []
        try:
            return [float(tok) for tok in val.split(",") if tok.strip()]
        except ValueError as exc:
            raise ConfigurationError(f"config key {key!r}: not a number list: {val!r}") from exc


def parse_truncation(spec: str) -> TruncationPolicy:
    kind, _, arg = spec.partition(":")
    if kind == "fixed":
        try:
            return TruncationPolicy.fixed(int(arg))
        except ValueError as exc:
            raise ConfigurationError(f"bad fixed truncation {spec!r}") from exc
    if kind == "adaptive":
        try:
            return TruncationPolicy.adaptive(float(arg))
        except ValueError as exc:
            raise ConfigurationError(f"bad adaptive truncation {spec!r}") from exc
    raise ConfigurationError(f"unknown truncation spec {spec!r}")


def parse_initial_field(spec: str, params: SpdeParams) -> InitialField:
    kind, _, arg = spec.partition(":")
    if kind == "poly":
        return polynomial_initial_field(float(arg) if arg else 30.0)
    if kind == "single_mode":
        return single_mode_initial_field(params, float(arg) if arg else 1.0)
    raise ConfigurationError(f"unknown initial field spec {spec!r} (use poly[:amp] or single_mode[:coef])")


@dataclass(frozen=True)
class SpdeExperimentConfig:
    """Validated SPDE Monte Carlo / estimation configuration."""

    params: SpdeParams
    noise: NoiseSpec
    xi_spec: str
    epsilon: float
    mu0_known: bool
    n_obs: int          # N
    m1: int
    m2: int
    n_thin: int         # n
    m_bar1: int
    m_bar2: int
    delta: float
    truncation: TruncationPolicy
    theta_box: tuple[tuple[float, float], tuple[float, float], tuple[float, float]]
    lambda_box: tuple[float, float]
    mu_box: tuple[float, float]
    coarse_halfwidth: float
    coarse_points: int
    regime_kind: str
    regime_c: float | None  # None -> realized (n eps^2)^{-1}
    replicates: int
    seed: int
    threads: int
    paths_t: tuple[float, ...] = ()
    paths_y: tuple[float, ...] = ()
    paths_z: tuple[float, ...] = ()
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def xi(self) -> InitialField:
        return parse_initial_field(self.xi_spec, self.params)

    def realized_c(self) -> float:
        return 1.0 / (self.n_thin * self.epsilon**2)

    def regime(self):
        from .ml import AsymptoticRegime
        c = self.regime_c if self.regime_c is not None else self.realized_c()
        return AsymptoticRegime(self.regime_kind, c=c if self.regime_kind == "B2" else c)


@dataclass(frozen=True)
class OuExperimentConfig:
    """Validated OU-laboratory Monte Carlo configuration."""

    model: OuModel
    mu_known: bool
    lambda_box: tuple[float, float]
    mu_box: tuple[float, float]
    regime_kind: str
    regime_c: float | None
    replicates: int
    seed: int
    threads: int
    raw: dict = field(default_factory=dict, repr=False)

    def realized_c(self) -> float:
        return 1.0 / (self.model.n * self.model.epsilon**2)

    def regime(self):
        from .ml import AsymptoticRegime
        c = self.regime_c if self.regime_c is not None else self.realized_c()
        return AsymptoticRegime(self.regime_kind, c=c)


def _interval(v: _View, lo_key: str, hi_key: str, default: tuple[float, float]):
    lo = v.float_(lo_key, default[0])
    hi = v.float_(hi_key, default[1])
    if lo > hi:
        raise ConfigurationError(f"{lo_key}/{hi_key}: empty interval [{lo}, {hi}]")
    return (lo, hi)


def build_spde_config(raw: dict[str, str], *, seed_override: int | None = None,
                      threads_override: int | None = None) -> SpdeExperimentConfig:
    v = _View(raw)
    kind = v.str_("model.kind", "spde")
    if kind != "spde":
        raise ConfigurationError(f"expected model.kind = spde, got {kind!r}")
    params = SpdeParams(
        v.float_("model.theta0", required=True),
        v.float_("model.theta1", required=True),
        v.float_("model.eta1", required=True),
        v.float_("model.theta2", required=True),
    )
    variant = v.str_("model.variant", "Q1")
    alpha = v.float_("model.alpha", required=True)
    mu0 = v.float_("model.mu0", 0.0) if variant == "Q2" else None
    noise = NoiseSpec(variant, alpha, mu0)
    epsilon = v.float_("model.epsilon", required=True)
    if not 0.0 < epsilon <= 1.0:
        raise ConfigurationError(f"model.epsilon must lie in (0, 1], got {epsilon}")
    n_obs = v.int_("grid.N", required=True)
    m1 = v.int_("grid.M1", required=True)
    m2 = v.int_("grid.M2", required=True)
    n_thin = v.int_("grid.n", n_obs)
    if not 1 <= n_thin <= n_obs:
        raise ConfigurationError(f"grid.n must satisfy 1 <= n <= N, got {n_thin}")
    m_bar1 = v.int_("grid.mbar1", m1)
    m_bar2 = v.int_("grid.mbar2", m2)
    delta = v.float_("grid.delta", 0.05)
    if not 0.0 < delta < 0.5:
        raise ConfigurationError(f"grid.delta must lie in (0, 1/2), got {delta}")
    for name, mb, mm in (("grid.mbar1", m_bar1, m1), ("grid.mbar2", m_bar2, m2)):
        if not 1 <= mb <= mm:
            raise ConfigurationError(f"{name} must satisfy 1 <= mbar <= M, got {mb}")
    truncation = parse_truncation(v.str_("grid.truncation", "adaptive:1e-7"))
    theta_box = (
        _interval(v, "est.theta1_min", "est.theta1_max", (-10.0, 10.0)),
        _interval(v, "est.eta1_min", "est.eta1_max", (-10.0, 10.0)),
        _interval(v, "est.theta2_min", "est.theta2_max", (1e-4, 100.0)),
    )
    if not theta_box[2][0] > 0:
        raise ConfigurationError("est.theta2_min must be positive")
    lambda_box = _interval(v, "est.lambda_min", "est.lambda_max", (1e-3, 1e3))
    mu_box = _interval(v, "est.mu_min", "est.mu_max", (1e-3, 1e3))
    regime_kind = v.str_("est.regime", "B1")
    if regime_kind not in ("B1", "B2"):
        raise ConfigurationError(f"est.regime must be B1 or B2, got {regime_kind!r}")
    c_raw = v.str_("est.c", "auto")
    regime_c = None if c_raw == "auto" else float(c_raw)
    replicates = v.int_("run.replicates", 1)
    if replicates < 1:
        raise ConfigurationError("run.replicates must be >= 1")
    seed = seed_override if seed_override is not None else v.int_("run.seed", 0)
    threads = threads_override if threads_override is not None else v.int_("run.threads", 1)
    cfg = SpdeExperimentConfig(
        params=params, noise=noise, xi_spec=v.str_("model.xi", "poly"),
        epsilon=epsilon, mu0_known=v.bool_("model.mu0_known", False),
        n_obs=n_obs, m1=m1, m2=m2, n_thin=n_thin, m_bar1=m_bar1, m_bar2=m_bar2,
        delta=delta, truncation=truncation, theta_box=theta_box,
        lambda_box=lambda_box, mu_box=mu_box,
        coarse_halfwidth=v.float_("est.kappa_halfwidth", 10.0),
        coarse_points=v.int_("est.coarse_points", 21),
        regime_kind=regime_kind, regime_c=regime_c,
        replicates=replicates, seed=seed, threads=max(1, threads),
        paths_t=tuple(v.floats_("paths.t")), paths_y=tuple(v.floats_("paths.y")),
        paths_z=tuple(v.floats_("paths.z")), raw=dict(raw),
    )
    cfg.xi  # force initial-field spec validation
    return cfg


def build_ou_config(raw: dict[str, str], *, seed_override: int | None = None,
                    threads_override: int | None = None) -> OuExperimentConfig:
    v = _View(raw)
    if v.str_("model.kind", "ou") != "ou":
        raise ConfigurationError("expected model.kind = ou")
    case = v.int_("model.case", required=True)
    model = OuModel(
        case=case,
        lam=v.float_("model.lambda", required=True),
        epsilon=v.float_("model.epsilon", required=True),
        alpha=v.float_("model.alpha", required=True),
        x0=v.float_("model.x0", required=True),
        n=v.int_("grid.n", required=True),
        mu=v.float_("model.mu") if case == 2 else None,
    )
    regime_kind = v.str_("est.regime", "B1")
    if regime_kind not in ("B1", "B2"):
        raise ConfigurationError(f"est.regime must be B1 or B2, got {regime_kind!r}")
    c_raw = v.str_("est.c", "auto")
    replicates = v.int_("run.replicates", 1)
    if replicates < 1:
        raise ConfigurationError("run.replicates must be >= 1")
    seed = seed_override if seed_override is not None else v.int_("run.seed", 0)
    threads = threads_override if threads_override is not None else v.int_("run.threads", 1)
    return OuExperimentConfig(
        model=model, mu_known=v.bool_("model.mu_known", False),
        lambda_box=_interval(v, "est.lambda_min", "est.lambda_max", (1e-3, 1e3)),
        mu_box=_interval(v, "est.mu_min", "est.mu_max", (1e-3, 1e3)),
        regime_kind=regime_kind,
        regime_c=None if c_raw == "auto" else float(c_raw),
        replicates=replicates, seed=seed, threads=max(1, threads), raw=dict(raw),
    )
