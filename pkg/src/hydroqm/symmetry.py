"""Galilean boosts and the evolve/boost commuting-diagram test.

A boost acts analytically on the phase background only:

    k0     -> k0 - m v / hbar
    omega0 -> omega0 - k0 . v + m v^2 / (2 hbar)

(the omega0 update is fixed by requiring boosted plane waves to keep the
free dispersion). R and the residual arrays are untouched, which makes the
nonlinear source fields exactly boost-invariant in this representation:
they depend on S only through lap(S) and on R through ratios.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dynamics, model
from .calculus import DEFAULT_STENCIL, StencilConfig
from .fields import Grid, HydroState, PhysicsParams
from .model import Couplings


@dataclass(frozen=True)
class BoostSpec:
    """Boost velocity; must be grid-compatible per axis:
    m v_k L_k / (2 pi hbar) integer, so the boosted phase lives on the grid."""

    velocity: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "velocity",
                           tuple(float(v) for v in np.atleast_1d(self.velocity)))

    @classmethod
    def from_modes(cls, modes, grid: Grid, params: PhysicsParams) -> "BoostSpec":
        """Velocity from integer mode numbers: v_k = 2 pi n_k hbar / (m L_k)."""
        modes = np.atleast_1d(modes)
        v = tuple(2.0 * np.pi * int(n) * params.hbar / (params.mass * L)
                  for n, L in zip(modes, grid.lengths))
        return cls(velocity=v)

    def validate(self, grid: Grid, params: PhysicsParams) -> tuple[int, ...]:
        """Check compatibility; returns the integer mode numbers."""
        if len(self.velocity) != grid.dim:
            raise ValueError("boost velocity must have one component per axis")
        modes = []
        for v, L in zip(self.velocity, grid.lengths):
            n = params.mass * v * L / (2.0 * np.pi * params.hbar)
            if abs(n - round(n)) > 1e-9:
                raise ValueError(
                    f"velocity {v:g} is not grid-compatible: m*v*L/(2*pi*hbar)="
                    f"{n:.6f} must be an integer"
                )
            modes.append(int(round(n)))
        return tuple(modes)


def boost(state: HydroState, spec: BoostSpec, params: PhysicsParams) -> HydroState:
    """State as seen from a frame moving with spec.velocity."""
    spec.validate(state.grid, params)
    v = np.array(spec.velocity)
    k0 = np.array(state.k0)
    k0_new = tuple(k0 - params.mass * v / params.hbar)
    omega_new = (state.omega0 - float(np.dot(k0, v))
                 + params.mass * float(np.dot(v, v)) / (2.0 * params.hbar))
    return HydroState(grid=state.grid, R=state.R, s_residual=state.s_residual,
                      k0=k0_new, omega0=omega_new, t=state.t)


def _roll_cells(spec: BoostSpec, grid: Grid, t: float) -> tuple[int, ...]:
    """Integer cell shift x -> x - v t; raises if t is not roll-compatible."""
    cells = []
    for v, h in zip(spec.velocity, grid.spacing):
        c = v * t / h
        if abs(c - round(c)) > 1e-6:
            raise ValueError(
                f"checkpoint t={t:g} shifts by {c:.6f} cells; pick checkpoint "
                "times that are multiples of spacing/velocity"
            )
        cells.append(int(round(c)))
    return tuple(cells)


def _to_moving_frame(state: HydroState, spec: BoostSpec,
                     params: PhysicsParams) -> HydroState:
    """Boost a state at time t and express its fields at moving-frame points
    (an exact integer roll when t is roll-compatible)."""
    boosted = boost(state, spec, params)
    cells = _roll_cells(spec, state.grid, state.t)
    R = boosted.R
    s = boosted.s_residual
    for ax, c in enumerate(cells):
        if c:
            R = np.roll(R, -c, axis=ax)
            s = np.roll(s, -c, axis=ax)
    return HydroState(grid=state.grid, R=R, s_residual=s, k0=boosted.k0,
                      omega0=boosted.omega0, t=state.t)


def invariance_test(initial: HydroState, spec: BoostSpec, params: PhysicsParams,
                    couplings: Couplings, cfg: dynamics.IntegratorConfig,
                    checkpoints: list[float],
                    stencil: StencilConfig = DEFAULT_STENCIL) -> float:
    """Max deviation between [evolve, boost] and [boost, evolve].

    Both paths are compared in the moving frame at each checkpoint, on rho
    and on grad S (gauge-free quantities). Checkpoints must be multiples of
    both dt and spacing/velocity so the frame change is an exact roll;
    requires a free potential (external potentials break the symmetry).
    """
    if params.potential.kind != "free":
        raise ValueError("the invariance test is defined for V = 0")
    spec.validate(initial.grid, params)
    if initial.t != 0.0:
        raise ValueError("start the commuting diagram at t = 0")

    times = sorted(checkpoints)
    for t_ck in times:
        n = t_ck / cfg.dt
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"checkpoint {t_ck:g} is not a multiple of dt")
        _roll_cells(spec, initial.grid, t_ck)  # validates roll compatibility

    def run_segments(state0):
        out = []
        state = state0
        t_prev = 0.0
        for t_ck in times:
            seg = dynamics.IntegratorConfig(
                dt=cfg.dt, t_final=t_ck - t_prev,
                stability_factor=cfg.stability_factor,
                snapshot_every=0, diagnostics_every=0,
            )
            state = dynamics.evolve(state, params, couplings, seg,
                                    stencil).final
            out.append(state)
            t_prev = t_ck
        return out

    path_a = run_segments(initial)                      # evolve, then boost
    path_b = run_segments(boost(initial, spec, params))  # boost, then evolve

    deviation = 0.0
    for state_a, state_b in zip(path_a, path_b):
        moved = _to_moving_frame(state_a, spec, params)
        drho = float(np.max(np.abs(moved.rho - state_b.rho)))
        gs_a = model.grad_s_total(moved, stencil)
        gs_b = model.grad_s_total(state_b, stencil)
        dgs = float(np.max(np.abs(gs_a - gs_b)))
        deviation = max(deviation, drho, dgs)
    return deviation
