"""Exact spectral simulation of the random field on the observation grid.

Each retained mode follows an Ornstein-Uhlenbeck process whose Gaussian
transition is sampled exactly (no time-discretization bias); the field is the
superposition of modes against the eigenfunction tensor factors.  Modes are
processed in blocks sharing the second index so that paths never have to be
materialized all at once, and each block draws from its own counter-based
substream so the truncation level never perturbs lower-mode draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import ConfigurationError
from .model import (
    PI2,
    InitialField,
    NoiseSpec,
    SpdeParams,
    initial_coefficient_table,
    validate_initial_field,
)


@dataclass(frozen=True)
class CoordinatePath:
    """One simulated mode: times in [0,1] and the process values."""

    idx: tuple[int, int]
    times: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class TruncationPolicy:
    """Spectral truncation: fixed index cap or stationary-tail tolerance."""

    mode: str  # "fixed" | "adaptive"
    k: int | None = None
    tol: float | None = None

    def __post_init__(self) -> None:
        if self.mode == "fixed":
            if self.k is None or self.k < 1:
                raise ConfigurationError("fixed truncation needs k >= 1")
        elif self.mode == "adaptive":
            if self.tol is None or not self.tol > 0:
                raise ConfigurationError("adaptive truncation needs tol > 0")
        else:
            raise ConfigurationError(f"unknown truncation mode {self.mode!r}")

    @staticmethod
    def fixed(k: int) -> "TruncationPolicy":
        return TruncationPolicy("fixed", k=k)

    @staticmethod
    def adaptive(tol: float) -> "TruncationPolicy":
        return TruncationPolicy("adaptive", tol=tol)


@dataclass(frozen=True)
class ObservationGrid:
    """Field values X_{t_i}(y_{j1}, z_{j2}) on the uniform space-time grid."""

    n_time: int
    m_space: tuple[int, int]
    epsilon: float
    field: np.ndarray  # (N+1, M1+1, M2+1)
    truncation_kmax: int
    seed: int
    replicate: int
    params: SpdeParams
    noise: NoiseSpec
    xi_description: str

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_time + 1) / self.n_time

    @property
    def ys(self) -> np.ndarray:
        return np.arange(self.m_space[0] + 1) / self.m_space[0]

    @property
    def zs(self) -> np.ndarray:
        return np.arange(self.m_space[1] + 1) / self.m_space[1]


def mode_tables(params: SpdeParams, noise: NoiseSpec, kmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalue and noise-damping tables for modes (k,l) in [1..kmax]^2."""
    k = np.arange(1, kmax + 1, dtype=float)
    k2 = k[:, None] ** 2 + k[None, :] ** 2
    lam = (
        -params.theta0
        + (params.theta1**2 + params.eta1**2) / (4.0 * params.theta2)
        + PI2 * k2 * params.theta2
    )
    if noise.variant == "Q1":
        damp = lam ** (-noise.alpha / 2.0)
    else:
        damp = (PI2 * k2 + float(noise.mu0)) ** (-noise.alpha / 2.0)
    return lam, damp


def transition_scale(lam, damping, dt):
    """Innovation sd of the exact OU transition (unit dispersion): damping * sqrt((1-e^{-2 lam dt})/(2 lam))."""
    lam = np.asarray(lam, dtype=float)
    return np.asarray(damping, dtype=float) * np.sqrt(-np.expm1(-2.0 * lam * dt) / (2.0 * lam))


def mode_stream(seed: int, replicate: int, l: int) -> np.random.Generator:
    """Counter-based substream for the block of modes sharing second index l.

    Row k of a (kmax, n) standard-normal draw from this stream is the driving
    noise of mode (k, l); rows are filled sequentially, so a larger truncation
    extends the draw without perturbing lower modes.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replicate, l))
    return np.random.Generator(np.random.Philox(ss))


def simulate_coordinate_path(lam: float, damping: float, epsilon: float, x0: float,
                             times: np.ndarray, rng: np.random.Generator,
                             idx: tuple[int, int] = (1, 1)) -> CoordinatePath:
    """Sample one mode exactly on an ascending time grid starting at 0."""
    if not lam > 0:
        raise ConfigurationError(f"lambda must be positive, got {lam}")
    if not damping > 0:
        raise ConfigurationError(f"damping must be positive, got {damping}")
    times = np.asarray(times, dtype=float)
    dts = np.diff(times)
    if times[0] != 0.0 or np.any(dts <= 0):
        raise ConfigurationError("times must be ascending and start at 0")
    decay = np.exp(-lam * dts)[None, :]
    scale = (epsilon * transition_scale(lam, damping, dts))[None, :]
    z = rng.standard_normal((1, dts.size))
    values = backend.exact_ou_recurrence(decay, scale, np.array([x0]), z)[0]
    return CoordinatePath(idx=idx, times=times, values=values)


def choose_truncation(policy: TruncationPolicy, params: SpdeParams, noise: NoiseSpec,
                      epsilon: float, *, k_limit: int = 512, cap: int = 2048) -> int:
    """Per-axis mode cap under the policy.

    Adaptive mode returns the smallest K such that the omitted-tail stationary
    variance  sum_{k or l > K} eps^2 damping^2 / (2 lambda)  (summed out to
    ``cap``) falls below the tolerance; failing to reach it by ``k_limit`` is
    a configuration error.
    """
    if policy.mode == "fixed":
        return int(policy.k)
    if epsilon == 0.0:
        return 1
    lam, damp = mode_tables(params, noise, cap)
    terms = epsilon**2 * damp**2 / (2.0 * lam)
    boxed = terms.cumsum(axis=0).cumsum(axis=1)
    total = boxed[-1, -1]
    tails = total - np.diagonal(boxed)
    hit = np.nonzero(tails[: min(k_limit, cap)] < policy.tol)[0]
    if hit.size == 0:
        raise ConfigurationError(
            f"adaptive truncation cannot reach tol={policy.tol:g} by K={k_limit}"
        )
    return int(hit[0]) + 1


def axis_factors(kmax: int, coords: np.ndarray, drift_coef: float, zero_boundary: bool = True) -> np.ndarray:
    """Per-axis eigenfunction factors sqrt(2) sin(pi k y) e^{-c y}, (kmax, len(coords)).

    Boundary coordinates are zeroed exactly so the Dirichlet condition holds
    bitwise on the synthesized grid.
    """
    coords = np.asarray(coords, dtype=float)
    ks = np.arange(1, kmax + 1, dtype=float)
    out = math.sqrt(2.0) * np.sin(math.pi * np.outer(ks, coords)) * np.exp(-drift_coef * coords)[None, :]
    if zero_boundary:
        out[:, (coords == 0.0) | (coords == 1.0)] = 0.0
    return out


@dataclass
class SliceSynthesis:
    """Output of the fused engine for the estimator-facing slices."""

    series: np.ndarray | None  # (p1, p2, N+1) at the selected space points
    field_thin: np.ndarray | None  # (nt, M1+1, M2+1) at the selected times
    kmax: int
    x0_table: np.ndarray


def _synthesize(params: SpdeParams, noise: NoiseSpec, xi: InitialField, epsilon: float,
                n_time: int, m_space: tuple[int, int], kmax: int, seed: int, replicate: int,
                *, quad_order: int | None = None, want_full: bool = False,
                space_sel: tuple[np.ndarray, np.ndarray] | None = None,
                time_sel: np.ndarray | None = None, parts: bool = False):
    """Shared engine: simulate all modes once, contract onto the requested outputs.

    Outputs (a dict) may contain 'field' (full grid), 'series'/'field_thin'
    (slices), and with parts=True the 'field_det'/'field_noise' split where
    field = field_det + epsilon * field_noise holds by construction.
    """
    N = n_time
    M1, M2 = m_space
    x0_table = initial_coefficient_table(params, xi, kmax, order=quad_order)
    lam, damp = mode_tables(params, noise, kmax)
    dt = 1.0 / N
    decay = np.exp(-lam * dt)
    scale_unit = transition_scale(lam, damp, dt)  # dispersion factored out

    phi_y = axis_factors(kmax, np.arange(M1 + 1) / M1, params.theta1 / (2.0 * params.theta2))
    phi_z = axis_factors(kmax, np.arange(M2 + 1) / M2, params.eta1 / (2.0 * params.theta2))

    out: dict[str, np.ndarray] = {}
    acc: dict[str, np.ndarray] = {}
    if want_full:
        targets = ["field_det", "field_noise"] if parts else ["field"]
        for name in targets:
            acc[name] = np.zeros((M1 + 1, N + 1, M2 + 1))
    if space_sel is not None:
        j1_sel, j2_sel = (np.asarray(s, dtype=int) for s in space_sel)
        phi_y_sel = phi_y[:, j1_sel]
        phi_z_sel = phi_z[:, j2_sel]
        acc["series"] = np.zeros((j1_sel.size, j2_sel.size, N + 1))
    if time_sel is not None:
        time_sel = np.asarray(time_sel, dtype=int)
        acc["field_thin"] = np.zeros((time_sel.size, M1 + 1, M2 + 1))

    zeros_m = np.zeros(kmax)
    for l in range(1, kmax + 1):
        col = l - 1
        rng = mode_stream(seed, replicate, l)
        z = rng.standard_normal((kmax, N))
        if parts:
            det = backend.exact_ou_recurrence(decay[:, col], zeros_m, x0_table[:, col], z)
            noise_part = backend.exact_ou_recurrence(decay[:, col], scale_unit[:, col], zeros_m, z)
            blocks = {"field_det": det, "field_noise": noise_part}
            paths = det + epsilon * noise_part
        else:
            paths = backend.exact_ou_recurrence(
                decay[:, col], epsilon * scale_unit[:, col], x0_table[:, col], z
            )
            blocks = {"field": paths}
        if want_full:
            for name, block in blocks.items():
                stage1 = phi_y.T @ block  # (M1+1, N+1)
                acc[name] += stage1[:, :, None] * phi_z[col][None, None, :]
        if space_sel is not None:
            stage1 = phi_y_sel.T @ paths  # (p1, N+1)
            acc["series"] += stage1[:, None, :] * phi_z_sel[col][None, :, None]
        if time_sel is not None:
            stage1 = phi_y.T @ paths[:, time_sel]  # (M1+1, nt)
            acc["field_thin"] += stage1.T[:, :, None] * phi_z[col][None, None, :]

    for name in ("field", "field_det", "field_noise"):
        if name in acc:
            out[name] = np.ascontiguousarray(acc[name].transpose(1, 0, 2))
    if parts and want_full:
        out["field"] = out["field_det"] + epsilon * out["field_noise"]
    if "series" in acc:
        out["series"] = acc["series"]
    if "field_thin" in acc:
        out["field_thin"] = acc["field_thin"]
    out["x0_table"] = x0_table
    return out


def simulate_dataset(params: SpdeParams, noise: NoiseSpec, xi: InitialField, epsilon: float,
                     n_time: int, m1: int, m2: int, truncation: TruncationPolicy, seed: int,
                     replicate: int = 0, quad_order: int | None = None) -> ObservationGrid:
    """Simulate the full observation grid (N+1) x (M1+1) x (M2+1)."""
    if not 0.0 <= epsilon <= 1.0:
        raise ConfigurationError(f"epsilon must lie in [0, 1], got {epsilon}")
    if n_time < 1 or m1 < 1 or m2 < 1:
        raise ConfigurationError("grid sizes must be positive")
    validate_initial_field(params, xi)
    kmax = choose_truncation(truncation, params, noise, epsilon)
    res = _synthesize(params, noise, xi, epsilon, n_time, (m1, m2), kmax, seed, replicate,
                      quad_order=quad_order, want_full=True)
    return ObservationGrid(
        n_time=n_time, m_space=(m1, m2), epsilon=epsilon, field=res["field"],
        truncation_kmax=kmax, seed=seed, replicate=replicate,
        params=params, noise=noise, xi_description=xi.description,
    )


def simulate_slices(params: SpdeParams, noise: NoiseSpec, xi: InitialField, epsilon: float,
                    n_time: int, m1: int, m2: int, truncation: TruncationPolicy, seed: int,
                    j1_sel: np.ndarray, j2_sel: np.ndarray, time_sel: np.ndarray,
                    replicate: int = 0, quad_order: int | None = None) -> SliceSynthesis:
    """Simulate only the estimator inputs: time series at a tensor sub-grid of
    space points plus the full space grid at selected times.

    Shares every draw and accumulation rule with :func:`simulate_dataset`, so
    the values agree with the corresponding entries of the full grid.
    """
    validate_initial_field(params, xi)
    kmax = choose_truncation(truncation, params, noise, epsilon)
    res = _synthesize(params, noise, xi, epsilon, n_time, (m1, m2), kmax, seed, replicate,
                      quad_order=quad_order, space_sel=(j1_sel, j2_sel), time_sel=time_sel)
    return SliceSynthesis(series=res["series"], field_thin=res["field_thin"],
                          kmax=kmax, x0_table=res["x0_table"])


def deterministic_field(params: SpdeParams, xi: InitialField, kmax: int,
                        times: np.ndarray, ys: np.ndarray, zs: np.ndarray,
                        quad_order: int | None = None) -> np.ndarray:
    """Semigroup image of the initial field: sum_k x0_k e^{-lambda_k t} e_k(y,z)."""
    x0 = initial_coefficient_table(params, xi, kmax, order=quad_order)
    lam, _ = mode_tables(params, NoiseSpec("Q1", 0.5), kmax)
    phi_y = axis_factors(kmax, np.asarray(ys, dtype=float), params.theta1 / (2 * params.theta2))
    phi_z = axis_factors(kmax, np.asarray(zs, dtype=float), params.eta1 / (2 * params.theta2))
    times = np.asarray(times, dtype=float)
    out = np.zeros((times.size, len(np.atleast_1d(ys)), len(np.atleast_1d(zs))))
    for i, t in enumerate(times):
        coef = x0 * np.exp(-lam * t)
        out[i] = phi_y.T @ coef @ phi_z
    return out


def dump_surface_csv(grid: ObservationGrid, path) -> None:
    """Write the grid as CSV rows t,y,z,value (row-major in time, y, z)."""
    times, ys, zs = grid.times, grid.ys, grid.zs
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t,y,z,value\n")
        for i, t in enumerate(times):
            for j1, y in enumerate(ys):
                row = grid.field[i, j1]
                for j2, z in enumerate(zs):
                    fh.write(f"{t:.17g},{y:.17g},{z:.17g},{row[j2]:.17g}\n")


def load_surface_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`dump_surface_csv`: returns (times, ys, zs, field)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    times = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    zs = np.unique(data[:, 2])
    expected = times.size * ys.size * zs.size
    if data.shape[0] != expected:
        raise ConfigurationError(
            f"surface CSV is not a complete grid: {data.shape[0]} rows vs {expected}"
        )
    field = data[:, 3].reshape(times.size, ys.size, zs.size)
    return times, ys, zs, field
