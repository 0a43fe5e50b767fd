"""Finite-difference operators on periodic rectangular grids.

Gradient, divergence, Laplacian and bilaplacian are built from central
stencils (2nd or 4th order) with periodic wrap. The bilaplacian is the
composition laplacian(laplacian(.)), which keeps the discrete identities
sum(lap f) = 0 and <f, lap g> = <lap f, g> exact; the variational
consistency tests rely on both.

The per-axis kernels come from a compiled extension when available, with a
numpy fallback selected at import (HYDROQM_STENCIL_BACKEND=python forces the
fallback).
"""
import os
from dataclasses import dataclass

import numpy as np

from . import _stencils_py

if os.environ.get("HYDROQM_STENCIL_BACKEND", "").lower() == "python":
    _impl = _stencils_py
else:
    try:
        from . import _stencils_cy as _impl
    except ImportError:
        _impl = _stencils_py

BACKEND = _impl.BACKEND

# largest |eigenvalue| of the 1D second-derivative stencil, in units of 1/h^2
_LAP_EIG_BOUND = {2: 4.0, 4: 16.0 / 3.0}


@dataclass(frozen=True)
class StencilConfig:
    """Stencil order selector; 4th order is the default everywhere."""

    order: int = 4

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError(f"stencil order must be 2 or 4, got {self.order}")


DEFAULT_STENCIL = StencilConfig()


def diff1_axis(f, axis, h, order=4):
    return _impl.diff1_axis(np.asarray(f, dtype=np.float64), axis, h, order)


def diff2_axis(f, axis, h, order=4):
    return _impl.diff2_axis(np.asarray(f, dtype=np.float64), axis, h, order)


def gradient(field, grid, cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    """Componentwise central gradient, shape (dim, *grid.shape)."""
    field = np.asarray(field, dtype=np.float64)
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    out = np.empty((grid.dim,) + grid.shape)
    for k in range(grid.dim):
        out[k] = _impl.diff1_axis(field, k, grid.spacing[k], cfg.order)
    return out


def laplacian(field, grid, cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    field = np.asarray(field, dtype=np.float64)
    if field.shape != grid.shape:
        raise ValueError(f"field shape {field.shape} does not match grid {grid.shape}")
    out = _impl.diff2_axis(field, 0, grid.spacing[0], cfg.order)
    for k in range(1, grid.dim):
        out += _impl.diff2_axis(field, k, grid.spacing[k], cfg.order)
    return out


def bilaplacian(field, grid, cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    """laplacian(laplacian(field)); composed, not a fused wide stencil."""
    return laplacian(laplacian(field, grid, cfg), grid, cfg)


def divergence(vec, grid, cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (grid.dim,) + grid.shape:
        raise ValueError(f"vector field shape {vec.shape} does not match grid")
    out = _impl.diff1_axis(vec[0], 0, grid.spacing[0], cfg.order)
    for k in range(1, grid.dim):
        out += _impl.diff1_axis(vec[k], k, grid.spacing[k], cfg.order)
    return out


def laplacian_eig_bound(grid, cfg: StencilConfig = DEFAULT_STENCIL) -> float:
    """Upper bound on |eigenvalue| of the discrete Laplacian (stiffness scale)."""
    c = _LAP_EIG_BOUND[cfg.order]
    return sum(c / h**2 for h in grid.spacing)
