"""Simulation and estimation toolkit for a 2-D linear parabolic SPDE with small dispersion."""

from .backend import HAS_COMPILED, backend_name, use_backend
from .contrast import SearchBox, SpatialContrastInput, contrast_u, minimize_contrast
from .errors import ConfigurationError, EstimationError, NumericError
from .ml import (
    ApproxCoordinatePath,
    AsymptoticRegime,
    VarianceReport,
    approximate_coordinate,
    asymptotic_variance,
    contrast_v1,
    contrast_v2,
    estimate_lambda_mu_q2,
    estimate_lambda_q1,
    recover_mu0,
    recover_theta0,
)
from .model import (
    InitialField,
    NoiseSpec,
    SpdeParams,
    eigenfunction_at,
    eigenvalue,
    initial_coefficient,
    inner_product,
    mu_value,
    noise_damping,
    polynomial_initial_field,
    single_mode_initial_field,
    theta0_from_lambda,
)
from .ou import OuModel, estimate_case1, estimate_case2, simulate_ou
from .qv import (
    ThinnedSpaceGrid,
    ThinnedTimeGrid,
    build_thinned_space_grid,
    build_thinned_time_grid,
    limit_surface,
    z_statistic,
    z_statistic_batch,
)
from .simulate import (
    CoordinatePath,
    ObservationGrid,
    TruncationPolicy,
    choose_truncation,
    dump_surface_csv,
    load_surface_csv,
    simulate_coordinate_path,
    simulate_dataset,
)

__version__ = "0.1.0"
