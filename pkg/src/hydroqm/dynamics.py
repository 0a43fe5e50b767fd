"""Time evolution of the coupled (rho, S) system, plus a split-step oracle.

The continuity variable is rho = R^2 (its discrete sum is then conserved
exactly: both flux divergence and the nonlinear source telescope to zero on
the periodic grid, and RK4 preserves linear invariants). The phase is
integrated as residual + accumulated spatial mean, so the stored residual
stays bounded; the mean reappears as omega0 = -phase_offset / t.

    d(rho)/dt = [ -(hbar^2/m) div(rho grad S) + h_I ] / hbar
    dS/dt     = (hbar/2m)(lap R / R - (grad S)^2) - V/hbar - h_R/(2 hbar R^2)
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import calculus, model, observables
from .calculus import DEFAULT_STENCIL, StencilConfig
from .fields import FLOOR_REL, Grid, HydroState, PhysicsParams, integrate
from .model import Couplings


class NumericalError(RuntimeError):
    """Evolution produced non-finite fields."""


class StabilityError(NumericalError):
    """Norm moved by more than 1% inside a single step."""


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_final: float
    scheme: str = "rk4"
    stability_factor: float = 0.5
    snapshot_every: int = 0  # 0: only first and last
    diagnostics_every: int = 1

    def __post_init__(self):
        if self.scheme != "rk4":
            raise ValueError("only the rk4 scheme is available")
        if self.dt <= 0 or self.t_final <= 0:
            raise ValueError("dt and t_final must be positive")
        if self.stability_factor <= 0:
            raise ValueError("stability_factor must be positive")
        if self.snapshot_every < 0 or self.diagnostics_every < 0:
            raise ValueError("cadence values must be nonnegative")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))


@dataclass
class Trajectory:
    snapshots: list[HydroState] = field(default_factory=list)
    diagnostics: list["observables.DiagnosticsRecord"] = field(default_factory=list)

    @property
    def initial(self) -> HydroState:
        return self.snapshots[0]

    @property
    def final(self) -> HydroState:
        return self.snapshots[-1]


# RK4 on the imaginary axis is stable up to |omega*dt| ~ 2.83.
_RK4_IMAG_LIMIT = 2.8


def stable_dt(grid: Grid, params: PhysicsParams, couplings: Couplings,
              cfg: StencilConfig = DEFAULT_STENCIL, rho_ref: float = 1.0,
              stability_factor: float = 0.5) -> float:
    """Heuristic step bound from the grid-cutoff dispersion rates.

    The linear rate is hbar*lam/(2m) with lam the Laplacian stiffness bound
    (~2d/h^2 scale). Around density rho_ref the coupling terms disperse like
    sqrt(c/(m rho)) * lam^(3/2); the prefactors were calibrated once on the
    desk-scale scenarios and frozen here.
    """
    lam = calculus.laplacian_eig_bound(grid, cfg)
    rate = params.hbar * lam / (2.0 * params.mass)
    c_eff = (2.0 * abs(couplings.c1) + abs(couplings.c2) + abs(couplings.c3)
             + 2.0 * abs(couplings.c4) + abs(couplings.c5) + abs(couplings.c6))
    if c_eff > 0.0 and rho_ref > 0.0:
        rate += math.sqrt(c_eff / (2.0 * params.mass * rho_ref)) * lam**1.5
    return stability_factor * _RK4_IMAG_LIMIT / rate


def _standard_rhs(grid: Grid, V: np.ndarray, params: PhysicsParams,
                  couplings: Couplings, cfg: StencilConfig, k0: tuple):
    """Build rhs(rho, s) -> (drho_dt, dS_dt) with V precomputed."""
    hbar, m = params.hbar, params.mass

    def rhs(rho: np.ndarray, s: np.ndarray):
        R = np.sqrt(np.clip(rho, 0.0, None))
        state = HydroState(grid=grid, R=R, s_residual=s, k0=k0)
        Rc = np.maximum(R, state.amplitude_floor())
        gs = model.grad_s_total(state, cfg)
        lapR = calculus.laplacian(R, grid, cfg)
        flux = calculus.divergence(rho * gs, grid, cfg)
        drho = -(hbar / m) * flux
        gs2 = np.einsum("k...,k...->...", gs, gs)
        dS = (hbar / (2.0 * m)) * (lapR / Rc - gs2) - V / hbar
        if not couplings.is_zero:
            hi, hr = model.h_i_and_h_r(state, couplings, cfg)
            drho += hi / hbar
            dS -= hr / (2.0 * hbar * Rc**2)
        return drho, dS

    return rhs


def rhs(state: HydroState, params: PhysicsParams, couplings: Couplings,
        cfg: StencilConfig = DEFAULT_STENCIL) -> tuple[np.ndarray, np.ndarray]:
    """Time derivatives (d rho/dt, dS/dt) of a state.

    Raises NumericalError naming the offending term when the result is
    contaminated by NaN/Inf.
    """
    V = params.potential.evaluate(state.grid, params.mass)
    f = _standard_rhs(state.grid, V, params, couplings, cfg, state.k0)
    drho, dS = f(state.rho, state.s_residual)
    if not (np.all(np.isfinite(drho)) and np.all(np.isfinite(dS))):
        raise NumericalError(
            "non-finite time derivative; first bad term: "
            + _diagnose_nonfinite(state, params, couplings, V, cfg)
        )
    return drho, dS


def _diagnose_nonfinite(state, params, couplings, V, cfg) -> str:
    checks = [
        ("rho", state.rho),
        ("grad_S", model.grad_s_total(state, cfg)),
        ("lap_R", calculus.laplacian(state.R, state.grid, cfg)),
        ("potential", V),
    ]
    if not couplings.is_zero:
        hi, hr = model.h_i_and_h_r(state, couplings, cfg)
        checks += [("h_I", hi), ("h_R", hr)]
    for name, arr in checks:
        if not np.all(np.isfinite(arr)):
            return name
    return "combined right-hand side"


def _rk4_step(rho, s, phi, dt, f):
    """One RK4 step of (rho, s, phi); f(rho, s) -> (drho, dS_field).

    The spatial mean of dS/dt is diverted into the scalar phase offset phi
    at every stage, keeping the residual centered.
    """
    def stage(r, sr):
        drho, dS = f(r, sr)
        dphi = float(dS.mean())
        return drho, dS - dphi, dphi

    k1 = stage(rho, s)
    k2 = stage(rho + 0.5 * dt * k1[0], s + 0.5 * dt * k1[1])
    k3 = stage(rho + 0.5 * dt * k2[0], s + 0.5 * dt * k2[1])
    k4 = stage(rho + dt * k3[0], s + dt * k3[1])
    rho_new = rho + (dt / 6.0) * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
    s_new = s + (dt / 6.0) * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    phi_new = phi + (dt / 6.0) * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
    return rho_new, s_new, phi_new


def _materialize(grid, rho, s, phi, k0, t) -> HydroState:
    R = np.sqrt(np.clip(rho, 0.0, None))
    omega0 = -phi / t if t != 0.0 else 0.0
    return HydroState(grid=grid, R=R, s_residual=s, k0=k0, omega0=omega0, t=t)


def step(state: HydroState, params: PhysicsParams, couplings: Couplings,
         dt: float, cfg: StencilConfig = DEFAULT_STENCIL) -> HydroState:
    """Single RK4 step; identity for dt = 0."""
    if dt == 0.0:
        return state
    V = params.potential.evaluate(state.grid, params.mass)
    f = _standard_rhs(state.grid, V, params, couplings, cfg, state.k0)
    phi0 = -state.omega0 * state.t
    rho, s, phi = _rk4_step(state.rho, state.s_residual, phi0, dt, f)
    norm0 = float(integrate(state.rho, state.grid))
    norm1 = float(integrate(np.clip(rho, 0.0, None), state.grid))
    if norm0 > 0 and abs(norm1 / norm0 - 1.0) > 0.01:
        raise StabilityError(
            f"norm moved by {abs(norm1 / norm0 - 1.0):.2%} in one step (dt={dt:g})"
        )
    return _materialize(state.grid, rho, s, phi, state.k0, state.t + dt)


def evolve(initial: HydroState, params: PhysicsParams, couplings: Couplings,
           cfg: IntegratorConfig, stencil: StencilConfig = DEFAULT_STENCIL,
           rhs_override=None, enforce_bound: bool = True) -> Trajectory:
    """Integrate to t_final, recording snapshots and diagnostics on cadence.

    rhs_override(rho, s) -> (drho_dt, dS_field) replaces the standard model
    right-hand side (used by the two-subsystem contrast experiments).
    """
    grid = initial.grid
    V = params.potential.evaluate(grid, params.mass)
    if rhs_override is not None:
        f = rhs_override
    else:
        f = _standard_rhs(grid, V, params, couplings, stencil, initial.k0)
        if enforce_bound:
            # the coupling stiffness is set by the thinnest density the run
            # visits; floor-flat tails make coupled runs intractable
            rho_floor = (FLOOR_REL * float(initial.R.max())) ** 2
            rho_ref = max(float(initial.rho.min()), rho_floor)
            bound = stable_dt(grid, params, couplings, stencil,
                              rho_ref=rho_ref,
                              stability_factor=cfg.stability_factor)
            if cfg.dt > bound:
                raise StabilityError(
                    f"dt={cfg.dt:g} exceeds the stability bound {bound:g}; "
                    "reduce dt or raise stability_factor explicitly"
                )

    traj = Trajectory()
    rho = initial.rho.copy()
    s = initial.s_residual.copy()
    phi = -initial.omega0 * initial.t
    t = initial.t
    norm0 = float(integrate(rho, grid))

    def record(state):
        traj.diagnostics.append(
            observables.diagnostics_record(state, params, couplings, stencil)
        )

    traj.snapshots.append(initial)
    record(initial)

    n = cfg.n_steps
    for i in range(1, n + 1):
        rho, s, phi = _rk4_step(rho, s, phi, cfg.dt, f)
        t = initial.t + i * cfg.dt
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(s))):
            state = _materialize(grid, np.nan_to_num(rho), np.nan_to_num(s), phi,
                                 initial.k0, t)
            raise NumericalError(
                f"non-finite fields at t={t:g} (step {i}); first bad term: "
                + _diagnose_nonfinite(state, params, couplings, V, stencil)
            )
        nrm = float(integrate(np.clip(rho, 0.0, None), grid))
        if norm0 > 0 and abs(nrm / norm0 - 1.0) > 0.01:
            raise StabilityError(f"norm drifted {abs(nrm/norm0-1):.2%} at t={t:g}")
        is_last = i == n
        if is_last or (cfg.snapshot_every and i % cfg.snapshot_every == 0):
            traj.snapshots.append(_materialize(grid, rho, s, phi, initial.k0, t))
        if is_last or (cfg.diagnostics_every and i % cfg.diagnostics_every == 0):
            record(_materialize(grid, rho, s, phi, initial.k0, t))
    return traj


def linear_reference_evolve(initial: HydroState, params: PhysicsParams,
                            cfg: IntegratorConfig) -> Trajectory:
    """Independent zero-coupling oracle: spectral split-step on psi.

    Strang splitting exp(-iV dt/2) exp(-i hbar k^2 dt/2m) exp(-iV dt/2) with
    FFT kinetics; used only in tests and comparison scenarios.
    """
    from .fields import from_wavefunction, to_wavefunction

    grid = initial.grid
    V = params.potential.evaluate(grid, params.mass)
    re, im = to_wavefunction(initial)
    psi = re + 1j * im
    ks = grid.wavenumbers()
    k2 = np.zeros(grid.shape)
    for ax, k in enumerate(ks):
        shape = [1] * grid.dim
        shape[ax] = -1
        k2 = k2 + k.reshape(shape) ** 2
    half_v = np.exp(-0.5j * V * cfg.dt / params.hbar)
    kin = np.exp(-0.5j * params.hbar * k2 * cfg.dt / params.mass)

    traj = Trajectory()

    def snap(psi_t, t):
        st = from_wavefunction(psi_t.real, psi_t.imag, grid, k0=initial.k0, t=t)
        traj.snapshots.append(st)
        traj.diagnostics.append(
            observables.diagnostics_record(st, params, Couplings())
        )

    snap(psi, initial.t)
    n = cfg.n_steps
    for i in range(1, n + 1):
        psi = half_v * psi
        psi = np.fft.ifftn(kin * np.fft.fftn(psi))
        psi = half_v * psi
        t = initial.t + i * cfg.dt
        if i == n or (cfg.snapshot_every and i % cfg.snapshot_every == 0):
            snap(psi, t)
    return traj
