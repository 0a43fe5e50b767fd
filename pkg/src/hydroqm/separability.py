"""Two-subsystem experiments on the joint configuration space.

A joint state of two 1D subsystems lives on the 2D grid grid1 x grid2 with
R(x1, x2) and S(x1, x2). The joint evolution is the ordinary dynamics with
the full configuration-space operators (lap = lap_1 + lap_2); on additive
phases the composed bilaplacian reduces to lap_1^2 S_1 + lap_2^2 S_2, which
is exactly the coupling term of the composite continuity equation.

The linear theory and the per-factor cubic contrast keep products factored;
the phase-curvature couplings do not, because their sources divide by the
joint density. correlation_metric quantifies the departure.
"""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from . import dynamics, model
from .calculus import DEFAULT_STENCIL, StencilConfig
from .fields import Grid, HydroState, PhysicsParams, PotentialSpec, integrate
from .model import Couplings


def joint_grid(grid1: Grid, grid2: Grid) -> Grid:
    if grid1.dim != 1 or grid2.dim != 1:
        raise ValueError("joint states are built from two 1D subsystems")
    return Grid(points=(grid1.points[0], grid2.points[0]),
                lengths=(grid1.lengths[0], grid2.lengths[0]))


def tensor_product(a: HydroState, b: HydroState) -> HydroState:
    """R = R1 R2, S = S1 + S2 on the joint grid; norms multiply."""
    grid = joint_grid(a.grid, b.grid)
    R = np.outer(a.R, b.R)
    s = a.s_residual[:, None] + b.s_residual[None, :]
    return HydroState(grid=grid, R=R, s_residual=s,
                      k0=(a.k0[0], b.k0[0]),
                      omega0=a.omega0 + b.omega0,
                      t=a.t)


def marginal_densities(state: HydroState) -> tuple[np.ndarray, np.ndarray]:
    h1, h2 = state.grid.spacing
    rho = state.rho
    return rho.sum(axis=1) * h2, rho.sum(axis=0) * h1


def correlation_metric(state: HydroState) -> float:
    """Normalized L2 distance between rho and the product of its marginals.

    Zero exactly when the density factorizes; insensitive to subsystem
    relabeling.
    """
    rho = state.rho
    n = float(integrate(rho, state.grid))
    rho1, rho2 = marginal_densities(state)
    product = np.outer(rho1, rho2) / n
    vol = state.grid.cell_volume
    dist = np.sqrt(((rho - product) ** 2).sum() * vol)
    scale = np.sqrt((rho**2).sum() * vol)
    return float(dist / scale)


def additive_potential(p1: PotentialSpec, p2: PotentialSpec) -> PotentialSpec:
    return PotentialSpec(kind="additive", parts=(p1, p2))


def factor_params(params: PhysicsParams, axis: int) -> PhysicsParams:
    """Parameters of one subsystem (equal masses, per-axis potential part)."""
    pot = params.potential
    if pot.kind == "additive":
        part = pot.parts[axis]
    elif pot.kind == "free":
        part = PotentialSpec(kind="free")
    else:
        raise ValueError("joint runs use free or additive potentials")
    return replace(params, potential=part)


def joint_evolve(initial: HydroState, params: PhysicsParams, couplings: Couplings,
                 cfg: dynamics.IntegratorConfig,
                 stencil: StencilConfig = DEFAULT_STENCIL) -> dynamics.Trajectory:
    """Evolve the joint system with the full 2D configuration-space operators."""
    if initial.grid.dim != 2:
        raise ValueError("joint evolution expects a 2D configuration space")
    if params.potential.kind not in ("free", "additive"):
        raise ValueError("joint runs use free or additive potentials")
    return dynamics.evolve(initial, params, couplings, cfg, stencil)


def evolve_factored_reference(a: HydroState, b: HydroState, params: PhysicsParams,
                              couplings: Couplings, cfg: dynamics.IntegratorConfig,
                              stencil: StencilConfig = DEFAULT_STENCIL):
    """Evolve each 1D factor independently with the same couplings.

    This is the isolated-subsystem prediction: when it disagrees with the
    joint run, the rest of the world is influencing an uncoupled particle.
    """
    traj_a = dynamics.evolve(a, factor_params(params, 0), couplings, cfg, stencil)
    traj_b = dynamics.evolve(b, factor_params(params, 1), couplings, cfg, stencil)
    return traj_a, traj_b


def product_deviation(joint: HydroState, a: HydroState, b: HydroState) -> float:
    """L-inf distance between the joint density and the factored one."""
    return float(np.max(np.abs(joint.rho - np.outer(a.rho, b.rho))))


def evolve_cubic(initial: HydroState, params: PhysicsParams,
                 cfg: dynamics.IntegratorConfig, g: float = 1.0,
                 variant: str = "factored",
                 stencil: StencilConfig = DEFAULT_STENCIL) -> dynamics.Trajectory:
    """Cubic-contrast evolutions on the joint space (couplings all zero).

    variant="factored": density coupling g*(rho_1(x1) + rho_2(x2)) built from
    the instantaneous marginals; keeps factored data factored.
    variant="naive": g * rho(x1, x2), the straightforward joint cubic term,
    which does not.
    """
    if variant not in ("factored", "naive"):
        raise ValueError("variant must be 'factored' or 'naive'")
    grid = initial.grid
    if grid.dim != 2:
        raise ValueError("cubic contrast runs on the 2D joint space")
    V = params.potential.evaluate(grid, params.mass)
    base = dynamics._standard_rhs(grid, V, params, Couplings(), stencil, initial.k0)
    h1, h2 = grid.spacing
    hbar = params.hbar

    def rhs(rho, s):
        drho, dS = base(rho, s)
        if variant == "factored":
            w = g * ((rho.sum(axis=1) * h2)[:, None] + (rho.sum(axis=0) * h1)[None, :])
        else:
            w = g * rho
        return drho, dS - w / hbar

    return dynamics.evolve(initial, params, Couplings(), cfg, stencil,
                           rhs_override=rhs)
