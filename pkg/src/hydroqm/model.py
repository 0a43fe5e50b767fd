"""Coupling algebra, Lagrangian density and the nonlinear source fields.

The extended model adds six couplings c1..c6 to the linear theory. Written
with w = grad(R)/R and u = lap(R)/R, the nonlinear Lagrangian density is

    -c1 (lap S)^2 - c2 (lap S) u - c3 (lap S) w^2
    - c4 u^2 - c5 u w^2 - c6 (w^2)^2

and the source fields h_I (continuity equation) and h_R (phase equation) are
its exact variational derivatives. Every composition below mirrors the
discrete gradient of the discretized action term by term, so the
finite-difference functional-derivative test closes to probe precision:

    h_I = 2 c1 lap(lap S) + c2 lap(u) + c3 lap(w^2)

    h_R = R * [ c2 lap(lap S / R) + 2 c4 lap(u / R) + c5 lap(w^2 / R)
                - div( 2 c3 lap(S) w / R + 2 c5 u w / R + 4 c6 w^2 w / R ) ]
          - [ c2 lap(S) u + 2 c3 lap(S) w^2 + 2 c4 u^2 + 3 c5 u w^2
              + 4 c6 (w^2)^2 ]

Note the single-c1 convention: the one-coupling model matches the classic
gamma-form equations with gamma = 2*c1 (run summaries echo this).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import calculus
from .calculus import DEFAULT_STENCIL, StencilConfig
from .fields import Grid, HydroState, PhysicsParams, integrate


@dataclass(frozen=True)
class Couplings:
    c1: float = 0.0
    c2: float = 0.0
    c3: float = 0.0
    c4: float = 0.0
    c5: float = 0.0
    c6: float = 0.0

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for c in self.as_tuple())

    @property
    def stationary_friendly(self) -> bool:
        """c2 = c3 = 0: stationary profiles survive arbitrary potentials."""
        return self.c2 == 0.0 and self.c3 == 0.0

    @property
    def is_original(self) -> bool:
        """Only c1 active: the one-coupling phase-curvature model."""
        return all(c == 0.0 for c in self.as_tuple()[1:])

    def as_tuple(self) -> tuple[float, ...]:
        return (self.c1, self.c2, self.c3, self.c4, self.c5, self.c6)


def couplings_from_b(b1=0.0, b2=0.0, b3=0.0, b4=0.0, b5=0.0, b6=0.0) -> Couplings:
    """Map the log-form couplings b1..b6 onto c1..c6.

    Derived by expanding grad(ln a R^2) = 2 grad(R)/R and
    lap(ln a R^2) = 2 lap(R)/R - 2 (grad(R)/R)^2 and collecting terms. The
    often-quoted coefficient table stops at c6 = 8 b5 - 4 b4; the b6 term
    contributes an extra -16 b6 (see tests/data/coupling_map_expansion.json).
    """
    return Couplings(
        c1=-b1,
        c2=-2.0 * b2,
        c3=2.0 * b2 - 4.0 * b3,
        c4=-4.0 * b4,
        c5=8.0 * b4 - 8.0 * b5,
        c6=8.0 * b5 - 4.0 * b4 - 16.0 * b6,
    )


class _Ratios:
    """Shared per-state fields: clamped denominators and stencil ratios."""

    __slots__ = ("grid", "cfg", "R", "Rc", "w", "u", "w2", "lap_s")

    def __init__(self, state: HydroState, cfg: StencilConfig):
        self.grid = state.grid
        self.cfg = cfg
        self.R = state.R
        eps = state.amplitude_floor()
        self.Rc = np.maximum(state.R, eps)
        self.w = calculus.gradient(state.R, state.grid, cfg) / self.Rc
        self.u = calculus.laplacian(state.R, state.grid, cfg) / self.Rc
        self.w2 = np.einsum("k...,k...->...", self.w, self.w)
        self.lap_s = calculus.laplacian(state.s_residual, state.grid, cfg)


# Unit-coefficient term fields and the couplings they carry. h_I and h_R are
# assembled from these, and the term-level golden tests exercise them one by
# one against a symbolic oracle.
HI_TERM_COEFFS = {
    "bilap_s": ("c1", 2.0),
    "lap_u": ("c2", 1.0),
    "lap_w2": ("c3", 1.0),
}

HR_TERM_COEFFS = {
    "lap_laps_over_r": ("c2", 1.0),
    "lap_u_over_r": ("c4", 2.0),
    "lap_w2_over_r": ("c5", 1.0),
    "div_laps_w_over_r": ("c3", -2.0),
    "div_u_w_over_r": ("c5", -2.0),
    "div_w2_w_over_r": ("c6", -4.0),
    "alg_laps_u": ("c2", -1.0),
    "alg_laps_w2": ("c3", -2.0),
    "alg_u2": ("c4", -2.0),
    "alg_u_w2": ("c5", -3.0),
    "alg_w4": ("c6", -4.0),
}


def _hi_term(r: _Ratios, name: str) -> np.ndarray:
    if name == "bilap_s":
        return calculus.laplacian(r.lap_s, r.grid, r.cfg)
    if name == "lap_u":
        return calculus.laplacian(r.u, r.grid, r.cfg)
    if name == "lap_w2":
        return calculus.laplacian(r.w2, r.grid, r.cfg)
    raise KeyError(name)


def _hr_term(r: _Ratios, name: str) -> np.ndarray:
    if name == "lap_laps_over_r":
        return r.R * calculus.laplacian(r.lap_s / r.Rc, r.grid, r.cfg)
    if name == "lap_u_over_r":
        return r.R * calculus.laplacian(r.u / r.Rc, r.grid, r.cfg)
    if name == "lap_w2_over_r":
        return r.R * calculus.laplacian(r.w2 / r.Rc, r.grid, r.cfg)
    if name == "div_laps_w_over_r":
        return r.R * calculus.divergence(r.lap_s * r.w / r.Rc, r.grid, r.cfg)
    if name == "div_u_w_over_r":
        return r.R * calculus.divergence(r.u * r.w / r.Rc, r.grid, r.cfg)
    if name == "div_w2_w_over_r":
        return r.R * calculus.divergence(r.w2 * r.w / r.Rc, r.grid, r.cfg)
    if name == "alg_laps_u":
        return r.lap_s * r.u
    if name == "alg_laps_w2":
        return r.lap_s * r.w2
    if name == "alg_u2":
        return r.u**2
    if name == "alg_u_w2":
        return r.u * r.w2
    if name == "alg_w4":
        return r.w2**2
    raise KeyError(name)


def hi_term_fields(state: HydroState, cfg: StencilConfig = DEFAULT_STENCIL) -> dict:
    r = _Ratios(state, cfg)
    return {name: _hi_term(r, name) for name in HI_TERM_COEFFS}


def hr_term_fields(state: HydroState, cfg: StencilConfig = DEFAULT_STENCIL) -> dict:
    r = _Ratios(state, cfg)
    return {name: _hr_term(r, name) for name in HR_TERM_COEFFS}


def _assemble(r: _Ratios, couplings: Couplings, coeffs: dict, term_fn) -> np.ndarray:
    out = np.zeros(r.grid.shape)
    for name, (attr, mult) in coeffs.items():
        c = getattr(couplings, attr)
        if c != 0.0:
            out += (mult * c) * term_fn(r, name)
    return out


def h_i(state: HydroState, couplings: Couplings,
        cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    """Nonlinear source in the continuity equation (a sum of Laplacians)."""
    if couplings.c1 == 0.0 and couplings.c2 == 0.0 and couplings.c3 == 0.0:
        return np.zeros(state.grid.shape)
    return _assemble(_Ratios(state, cfg), couplings, HI_TERM_COEFFS, _hi_term)


def h_r(state: HydroState, couplings: Couplings,
        cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    """Nonlinear source in the phase equation."""
    if all(c == 0.0 for c in (couplings.c2, couplings.c3, couplings.c4,
                              couplings.c5, couplings.c6)):
        return np.zeros(state.grid.shape)
    return _assemble(_Ratios(state, cfg), couplings, HR_TERM_COEFFS, _hr_term)


def h_i_and_h_r(state: HydroState, couplings: Couplings,
                cfg: StencilConfig = DEFAULT_STENCIL) -> tuple[np.ndarray, np.ndarray]:
    """Both source fields sharing one ratio computation (hot path)."""
    if couplings.is_zero:
        z = np.zeros(state.grid.shape)
        return z, z.copy()
    r = _Ratios(state, cfg)
    return (_assemble(r, couplings, HI_TERM_COEFFS, _hi_term),
            _assemble(r, couplings, HR_TERM_COEFFS, _hr_term))


def nonlinear_hamiltonian(state: HydroState, couplings: Couplings,
                          cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    """Complex field h_R/(2 R^2) + i h_I/(2 R^2), floor-clamped.

    Homogeneous of degree zero in R: rescaling the amplitude leaves it
    unchanged, unlike every term of the linear equation.
    """
    hi, hr = h_i_and_h_r(state, couplings, cfg)
    rho_c = np.maximum(state.R, state.amplitude_floor()) ** 2
    return (hr + 1j * hi) / (2.0 * rho_c)


def grad_s_total(state: HydroState, cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    """grad S including the analytic background k0."""
    gs = calculus.gradient(state.s_residual, state.grid, cfg)
    for k, k0k in enumerate(state.k0):
        if k0k != 0.0:
            gs[k] += k0k
    return gs


def nonlinear_density(state: HydroState, couplings: Couplings,
                      cfg: StencilConfig = DEFAULT_STENCIL,
                      ratios: _Ratios = None) -> np.ndarray:
    """c1 (lap S)^2 + c2 lap(S) u + ... + c6 (w^2)^2, pointwise."""
    if couplings.is_zero:
        return np.zeros(state.grid.shape)
    r = ratios if ratios is not None else _Ratios(state, cfg)
    out = np.zeros(state.grid.shape)
    if couplings.c1:
        out += couplings.c1 * r.lap_s**2
    if couplings.c2:
        out += couplings.c2 * r.lap_s * r.u
    if couplings.c3:
        out += couplings.c3 * r.lap_s * r.w2
    if couplings.c4:
        out += couplings.c4 * r.u**2
    if couplings.c5:
        out += couplings.c5 * r.u * r.w2
    if couplings.c6:
        out += couplings.c6 * r.w2**2
    return out


def lagrangian_density(state: HydroState, params: PhysicsParams, couplings: Couplings,
                       cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    """Pointwise spatial Lagrangian density (time term excluded).

    L = -[ hbar^2/(2m) ((grad R)^2 + R^2 (grad S)^2) + R^2 V ] - L_nl
    """
    gR = calculus.gradient(state.R, state.grid, cfg)
    gs = grad_s_total(state, cfg)
    rho = state.rho
    kin = (params.hbar**2 / (2.0 * params.mass)) * (
        np.einsum("k...,k...->...", gR, gR)
        + rho * np.einsum("k...,k...->...", gs, gs)
    )
    V = params.potential.evaluate(state.grid, params.mass)
    return -(kin + rho * V) - nonlinear_density(state, couplings, cfg)


def spatial_action(state: HydroState, params: PhysicsParams, couplings: Couplings,
                   cfg: StencilConfig = DEFAULT_STENCIL) -> float:
    """Discrete spatial action sum(L) * cell volume.

    The amplitude kinetic term is written in summation-by-parts form
    +hbar^2/(2m) R lap(R) (equal to the gradient form up to O(h^order) in
    the sum), which makes the discrete functional derivative of this action
    exactly the operator expressions used by the dynamics.
    """
    gs = grad_s_total(state, cfg)
    rho = state.rho
    lapR = calculus.laplacian(state.R, state.grid, cfg)
    kin = (params.hbar**2 / (2.0 * params.mass)) * (
        -state.R * lapR + rho * np.einsum("k...,k...->...", gs, gs)
    )
    V = params.potential.evaluate(state.grid, params.mass)
    density = -(kin + rho * V) - nonlinear_density(state, couplings, cfg)
    return float(integrate(density, state.grid))


def current(state: HydroState, params: PhysicsParams, couplings: Couplings,
            cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    """Probability current, shape (dim, *grid.shape).

    j = hbar^2/m rho grad(S) - [2 c1 grad(lap S) + c2 grad(u) + c3 grad(w^2)]

    Its divergence tracks hbar^2/m div(rho grad S) - h_I; with only c1
    active this is the classic gamma-form current with gamma = 2*c1.
    """
    rho = state.rho
    gs = grad_s_total(state, cfg)
    j = (params.hbar**2 / params.mass) * rho * gs
    if couplings.c1 or couplings.c2 or couplings.c3:
        r = _Ratios(state, cfg)
        q = np.zeros(state.grid.shape)
        if couplings.c1:
            q += 2.0 * couplings.c1 * r.lap_s
        if couplings.c2:
            q += couplings.c2 * r.u
        if couplings.c3:
            q += couplings.c3 * r.w2
        j -= calculus.gradient(q, state.grid, cfg)
    return j
