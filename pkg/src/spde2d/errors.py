"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameter, grid, or experiment configuration."""


class EstimationError(RuntimeError):
    """An estimator could not produce a usable result."""


class NumericError(ArithmeticError):
    """A numeric computation produced non-finite intermediate values."""
