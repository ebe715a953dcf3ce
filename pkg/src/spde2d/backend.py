"""Kernel backend selection: compiled extension if available, numpy fallback otherwise.

The environment variable ``SPDE2D_BACKEND`` (``compiled`` or ``python``)
overrides the default choice; :func:`use_backend` switches at runtime, which
the benchmark and the backend-parity tests rely on.
"""
from __future__ import annotations

import os

from . import _kernels_py

try:
    from . import _kernels  # type: ignore[attr-defined]
except ImportError:  # extension not built
    _kernels = None

HAS_COMPILED = _kernels is not None

_active = _kernels_py
if HAS_COMPILED and os.environ.get("SPDE2D_BACKEND", "compiled") != "python":
    _active = _kernels
elif os.environ.get("SPDE2D_BACKEND") == "compiled" and not HAS_COMPILED:
    raise ImportError("SPDE2D_BACKEND=compiled requested but the extension is not built")


def use_backend(name: str) -> None:
    """Switch the active kernel backend ('compiled' or 'python')."""
    global _active
    if name == "python":
        _active = _kernels_py
    elif name == "compiled":
        if not HAS_COMPILED:
            raise ValueError("compiled backend is not available")
        _active = _kernels
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend_name() -> str:
    return _active.BACKEND_NAME


def exact_ou_recurrence(decay, scale, x0, z):
    return _active.exact_ou_recurrence(decay, scale, x0, z)


def sq_increment_sum(series):
    return _active.sq_increment_sum(series)
