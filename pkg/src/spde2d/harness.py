"""Monte Carlo orchestration: replicate pipelines, summaries, and file outputs.

A replicate of the field experiment runs simulate -> quadratic variation ->
spatial contrast -> coordinate ML -> recovery.  Replicates own disjoint RNG
substreams derived from (master seed, replicate), so results are independent
of the replicate count and may be computed in any worker order; per-replicate
estimation failures become coded rows rather than aborting the experiment.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy import stats as sps

from . import ml
from .config import OuExperimentConfig, SpdeExperimentConfig
from .contrast import SearchBox, SpatialContrastInput, minimize_contrast
from .errors import ConfigurationError, EstimationError
from .model import initial_coefficient, mu_value
from .ou import estimate_case1, estimate_case2, ou_stream, simulate_ou_batch
from .qv import build_thinned_space_grid, build_thinned_time_grid, z_statistic_batch
from .simulate import simulate_slices

CSV_HEADER = ("rep,theta1_hat,eta1_hat,theta2_hat,lambda11_hat,theta0_hat,"
              "mu0_hat,stud_eps,stud_sqrtn,clamped,fail_code,wall_ms")


class ExperimentFailed(RuntimeError):
    """More than the tolerated fraction of replicates failed."""


@dataclass
class ReplicateRecord:
    rep: int
    theta1_hat: float | None = None
    eta1_hat: float | None = None
    theta2_hat: float | None = None
    lambda11_hat: float | None = None
    theta0_hat: float | None = None
    mu0_hat: float | None = None
    stud_eps: float | None = None
    stud_sqrtn: float | None = None
    clamped: bool = False
    fail_code: str = ""
    wall_ms: float = 0.0


@dataclass(frozen=True)
class TruthContext:
    """True values and studentization scales shared by all replicates."""

    theta0: float
    theta1: float
    eta1: float
    theta2: float
    lambda11: float
    mu11: float | None
    mu0: float | None
    x0: float
    g: float
    h: float
    i_total: float | None


def spde_truth(cfg: SpdeExperimentConfig) -> TruthContext:
    p = cfg.params
    lam = p.lambda11
    x0 = initial_coefficient(p, cfg.xi, (1, 1))
    if cfg.noise.variant == "Q2":
        mu11 = mu_value(cfg.noise, (1, 1))
        rep = ml.asymptotic_variance("Q2", cfg.regime(), lam, cfg.noise.alpha, x0, mu=mu11)
        return TruthContext(p.theta0, p.theta1, p.eta1, p.theta2, lam, mu11,
                            float(cfg.noise.mu0), x0, rep.g, rep.h, rep.i_total)
    rep = ml.asymptotic_variance("Q1", cfg.regime(), lam, cfg.noise.alpha, x0)
    return TruthContext(p.theta0, p.theta1, p.eta1, p.theta2, lam, None, None,
                        x0, rep.g, rep.h, rep.i_total)


def run_spde_replicate(cfg: SpdeExperimentConfig, truth: TruthContext, rep: int) -> ReplicateRecord:
    start = time.perf_counter()
    rec = ReplicateRecord(rep=rep)
    try:
        sgrid = build_thinned_space_grid(cfg.m1, cfg.m2, cfg.m_bar1, cfg.m_bar2, cfg.delta)
        tgrid = build_thinned_time_grid(cfg.n_obs, cfg.n_thin)
        sl = simulate_slices(cfg.params, cfg.noise, cfg.xi, cfg.epsilon,
                             cfg.n_obs, cfg.m1, cfg.m2, cfg.truncation, cfg.seed,
                             sgrid.j1_indices, sgrid.j2_indices, tgrid.indices,
                             replicate=rep)
        zvals = z_statistic_batch(sl.series, cfg.noise.alpha) / cfg.epsilon**2
        inp = SpatialContrastInput(zvals, sgrid, cfg.noise.alpha, cfg.epsilon,
                                   cfg.noise.variant)
        box = SearchBox(*cfg.theta_box)
        sfit = minimize_contrast(inp, box, coarse_halfwidth=cfg.coarse_halfwidth,
                                 coarse_points=cfg.coarse_points)
        plugin = (sfit.theta1, sfit.eta1, sfit.theta2)
        xhat = ml.approximate_coordinate_values(sl.field_thin, cfg.m1, cfg.m2, plugin)
        if cfg.noise.variant == "Q1":
            lfit = ml.estimate_lambda_q1(xhat, tgrid.dt, cfg.epsilon, cfg.noise.alpha,
                                         cfg.lambda_box)
            mu_clamped = False
            rec.mu0_hat = None
        else:
            mu_known = mu_value(cfg.noise, (1, 1)) if cfg.mu0_known else None
            lfit, mu_hat, mu_clamped = ml.estimate_lambda_mu_q2(
                xhat, tgrid.dt, cfg.epsilon, cfg.noise.alpha,
                cfg.lambda_box, cfg.mu_box, mu_known)
            rec.mu0_hat = ml.recover_mu0(mu_hat)
        rec.theta1_hat, rec.eta1_hat, rec.theta2_hat = plugin
        rec.lambda11_hat = lfit.lam
        rec.theta0_hat = ml.recover_theta0(lfit.lam, plugin)
        rec.clamped = bool(sfit.clamped or lfit.clamped or mu_clamped)
        rec.stud_eps = (rec.theta0_hat - truth.theta0) / cfg.epsilon * math.sqrt(truth.g)
        if cfg.noise.variant == "Q1":
            rec.stud_sqrtn = (math.sqrt(cfg.n_thin) * (rec.theta0_hat - truth.theta0)
                              * math.sqrt(truth.i_total))
        else:
            rec.stud_sqrtn = (math.sqrt(cfg.n_thin) * (rec.mu0_hat - truth.mu0)
                              * math.sqrt(truth.h))
    except (EstimationError, ConfigurationError) as exc:
        rec.fail_code = f"estimation:{exc.__class__.__name__}"
    except Exception as exc:  # pragma: no cover - defensive
        rec.fail_code = f"error:{exc.__class__.__name__}"
    rec.wall_ms = (time.perf_counter() - start) * 1e3
    return rec


def _spde_task(args):
    cfg, truth, rep = args
    return run_spde_replicate(cfg, truth, rep)


def _limit_worker_blas() -> None:
    # one BLAS thread per worker; the pool owns the parallelism
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(1)
    except ImportError:  # pragma: no cover
        pass


def run_replicates(cfg: SpdeExperimentConfig) -> list[ReplicateRecord]:
    """All replicates of the field experiment, in replicate order."""
    truth = spde_truth(cfg)
    reps = range(cfg.replicates)
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads,
                                 initializer=_limit_worker_blas) as pool:
            records = list(pool.map(_spde_task, [(cfg, truth, r) for r in reps]))
    else:
        records = [run_spde_replicate(cfg, truth, r) for r in reps]
    return records


def ou_truth(cfg: OuExperimentConfig) -> TruthContext:
    m = cfg.model
    variant = "Q1" if m.case == 1 else "Q2"
    rep = ml.asymptotic_variance(variant, cfg.regime(), m.lam, m.alpha, m.x0, mu=m.mu)
    return TruthContext(math.nan, math.nan, math.nan, math.nan, m.lam, m.mu, None,
                        m.x0, rep.g, rep.h, rep.i_total)


def run_ou_replicate(cfg: OuExperimentConfig, truth: TruthContext, rep: int) -> ReplicateRecord:
    start = time.perf_counter()
    rec = ReplicateRecord(rep=rep)
    m = cfg.model
    try:
        values = simulate_ou_batch(m, ou_stream(cfg.seed, rep), 1)[0]
        if m.case == 1:
            fit, _ = estimate_case1(values, m.epsilon, m.alpha, cfg.lambda_box,
                                    regime=cfg.regime(), x0=m.x0)
            rec.lambda11_hat = fit.lam
            rec.clamped = fit.clamped
            rec.stud_eps = (fit.lam - m.lam) / m.epsilon * math.sqrt(truth.g)
            rec.stud_sqrtn = math.sqrt(m.n) * (fit.lam - m.lam) * math.sqrt(truth.i_total)
        else:
            mu_known = m.mu if cfg.mu_known else None
            fit, mu_hat, _report = estimate_case2(values, m.epsilon, m.alpha,
                                                  cfg.lambda_box, cfg.mu_box,
                                                  mu_known=mu_known,
                                                  regime=cfg.regime(), x0=m.x0)
            rec.lambda11_hat = fit.lam
            rec.mu0_hat = mu_hat  # for the OU lab this column holds mu_hat itself
            rec.clamped = fit.clamped
            rec.stud_eps = (fit.lam - m.lam) / m.epsilon * math.sqrt(truth.g)
            rec.stud_sqrtn = math.sqrt(m.n) * (mu_hat - m.mu) * math.sqrt(truth.h)
    except (EstimationError, ConfigurationError) as exc:
        rec.fail_code = f"estimation:{exc.__class__.__name__}"
    except Exception as exc:  # pragma: no cover - defensive
        rec.fail_code = f"error:{exc.__class__.__name__}"
    rec.wall_ms = (time.perf_counter() - start) * 1e3
    return rec


def run_ou_replicates(cfg: OuExperimentConfig) -> list[ReplicateRecord]:
    truth = ou_truth(cfg)
    return [run_ou_replicate(cfg, truth, r) for r in range(cfg.replicates)]


def failure_fraction(records: list[ReplicateRecord]) -> float:
    if not records:
        return 1.0
    return sum(1 for r in records if r.fail_code) / len(records)


def experiment_failed(records: list[ReplicateRecord]) -> bool:
    return failure_fraction(records) > 0.10


def _column(records, name):
    vals = [getattr(r, name) for r in records if not r.fail_code]
    return np.array([v for v in vals if v is not None], dtype=float)


def _moment_block(vals: np.ndarray, stud: np.ndarray | None,
                  se_theoretical: float | None) -> dict:
    block: dict[str, float | None] = {
        "mean": float(np.mean(vals)),
        "sd": float(np.std(vals, ddof=1)),
        "skew": float(sps.skew(vals, bias=False)) if vals.size > 2 and np.std(vals) > 0 else 0.0,
        "kurt": float(sps.kurtosis(vals, bias=False)) if vals.size > 3 and np.std(vals) > 0 else 0.0,
        "ks_stat": None,
        "se_theoretical": se_theoretical,
        "se_ratio": None,
    }
    if stud is not None and stud.size >= 2:
        block["ks_stat"] = float(sps.kstest(stud, "norm").statistic)
    if se_theoretical:
        block["se_ratio"] = block["sd"] / se_theoretical
    return block


def summarize(records: list[ReplicateRecord],
              cfg: SpdeExperimentConfig | OuExperimentConfig) -> dict:
    """Experiment summary: per-estimator moments, KS statistics, se ratios."""
    ok = [r for r in records if not r.fail_code]
    if len(ok) < 2:
        raise ExperimentFailed(f"only {len(ok)} successful replicates; need >= 2")
    stud_eps = _column(records, "stud_eps")
    stud_sqrtn = _column(records, "stud_sqrtn")
    is_spde = isinstance(cfg, SpdeExperimentConfig)
    if is_spde:
        truth = spde_truth(cfg)
        eps, n = cfg.epsilon, cfg.n_thin
    else:
        truth = ou_truth(cfg)
        eps, n = cfg.model.epsilon, cfg.model.n
    per: dict[str, dict] = {}
    se_eps_scale = eps / math.sqrt(truth.g) if truth.g > 0 else None
    eps_norm_target = "theta0_hat" if is_spde else "lambda11_hat"
    for name in ("theta1_hat", "eta1_hat", "theta2_hat", "lambda11_hat",
                 "theta0_hat", "mu0_hat"):
        vals = _column(records, name)
        if vals.size < 2:
            continue
        stud = None
        se = None
        if name == eps_norm_target:
            stud = stud_eps
            se = se_eps_scale
        elif name == "mu0_hat" and truth.h > 0:
            stud = stud_sqrtn
            se = 1.0 / math.sqrt(n * truth.h)
        per[name] = _moment_block(vals, stud, se)
    return {
        "config_echo": dict(cfg.raw),
        "n_success": len(ok),
        "n_fail": len(records) - len(ok),
        "failed": experiment_failed(records),
        "estimators": per,
        "studentized": {
            "stud_eps": _moment_block(stud_eps, stud_eps, 1.0) if stud_eps.size >= 2 else None,
            "stud_sqrtn": _moment_block(stud_sqrtn, stud_sqrtn, 1.0) if stud_sqrtn.size >= 2 else None,
        },
    }


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_replicates_csv(records: list[ReplicateRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(",".join(_fmt(v) for v in (
                r.rep, r.theta1_hat, r.eta1_hat, r.theta2_hat, r.lambda11_hat,
                r.theta0_hat, r.mu0_hat, r.stud_eps, r.stud_sqrtn,
                r.clamped, r.fail_code, r.wall_ms,
            )) + "\n")


def write_summary_json(summary: dict, path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


@dataclass
class EstimationReport:
    """Single-dataset estimation output (JSON-serializable via asdict)."""

    variant: str
    theta1_hat: float
    eta1_hat: float
    theta2_hat: float
    lambda11_hat: float
    theta0_hat: float
    mu11_hat: float | None
    mu0_hat: float | None
    contrast_u: float
    contrast_v: float
    se_theta0_eps_norm: float | None
    se_mu0_sqrtn_norm: float | None
    clamped: bool
    coarse_seed: tuple[float, float]
    nm_iterations: int
    wall_ms: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def estimate_dataset(field: np.ndarray, cfg: SpdeExperimentConfig) -> EstimationReport:
    """Full two-stage estimation on one observed field array (N+1, M1+1, M2+1)."""
    start = time.perf_counter()
    n_obs = field.shape[0] - 1
    m1, m2 = field.shape[1] - 1, field.shape[2] - 1
    sgrid = build_thinned_space_grid(m1, m2, cfg.m_bar1, cfg.m_bar2, cfg.delta)
    tgrid = build_thinned_time_grid(n_obs, min(cfg.n_thin, n_obs))
    series = field[:, sgrid.j1_indices][:, :, sgrid.j2_indices].transpose(1, 2, 0)
    zvals = z_statistic_batch(series, cfg.noise.alpha) / cfg.epsilon**2
    inp = SpatialContrastInput(zvals, sgrid, cfg.noise.alpha, cfg.epsilon, cfg.noise.variant)
    sfit = minimize_contrast(inp, SearchBox(*cfg.theta_box),
                             coarse_halfwidth=cfg.coarse_halfwidth,
                             coarse_points=cfg.coarse_points)
    plugin = (sfit.theta1, sfit.eta1, sfit.theta2)
    xhat = ml.approximate_coordinate_values(field[tgrid.indices], m1, m2, plugin)
    mu11_hat = mu0_hat = None
    if cfg.noise.variant == "Q1":
        lfit = ml.estimate_lambda_q1(xhat, tgrid.dt, cfg.epsilon, cfg.noise.alpha,
                                     cfg.lambda_box)
        mu_clamped = False
    else:
        mu_known = mu_value(cfg.noise, (1, 1)) if cfg.mu0_known else None
        lfit, mu11_hat, mu_clamped = ml.estimate_lambda_mu_q2(
            xhat, tgrid.dt, cfg.epsilon, cfg.noise.alpha,
            cfg.lambda_box, cfg.mu_box, mu_known)
        mu0_hat = ml.recover_mu0(mu11_hat)
    theta0_hat = ml.recover_theta0(lfit.lam, plugin)
    # standard errors with the observed initial coordinate standing in for x(0)
    x0_plug = float(xhat[0])
    se_eps = se_mu = None
    try:
        var = ml.asymptotic_variance(cfg.noise.variant, cfg.regime(), lfit.lam,
                                     cfg.noise.alpha, x0_plug, mu=mu11_hat)
        se_eps = cfg.epsilon * var.se_eps if var.se_eps else None
        if cfg.noise.variant == "Q2":
            se_mu = var.se_sqrtn / math.sqrt(tgrid.n)
    except (EstimationError, ConfigurationError):
        pass
    return EstimationReport(
        variant=cfg.noise.variant,
        theta1_hat=sfit.theta1, eta1_hat=sfit.eta1, theta2_hat=sfit.theta2,
        lambda11_hat=lfit.lam, theta0_hat=theta0_hat,
        mu11_hat=mu11_hat, mu0_hat=mu0_hat,
        contrast_u=sfit.contrast, contrast_v=lfit.contrast,
        se_theta0_eps_norm=se_eps, se_mu0_sqrtn_norm=se_mu,
        clamped=bool(sfit.clamped or lfit.clamped or mu_clamped),
        coarse_seed=sfit.coarse_seed, nm_iterations=sfit.nm_iterations,
        wall_ms=(time.perf_counter() - start) * 1e3,
    )
