"""hydroqm: a desk-scale laboratory for Schrodinger dynamics in hydrodynamic
(R, S) variables with Galilean-invariant phase-curvature nonlinearities."""

from .calculus import BACKEND, StencilConfig
from .fields import (
    Grid,
    HydroState,
    PhysicsParams,
    PotentialSpec,
    from_wavefunction,
    norm,
    to_wavefunction,
)
from .model import Couplings, couplings_from_b

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Couplings",
    "Grid",
    "HydroState",
    "PhysicsParams",
    "PotentialSpec",
    "StencilConfig",
    "couplings_from_b",
    "from_wavefunction",
    "norm",
    "to_wavefunction",
    "__version__",
]
