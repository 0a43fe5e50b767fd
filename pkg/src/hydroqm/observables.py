"""Energy functionals, expectation values and Ehrenfest corrections.

Two inequivalent energies coexist: the mean-value energy e_qm (which keeps
its imaginary part) and the field-theoretical e_ft built from the Lagrangian
density. They agree only when every coupling vanishes; their difference is a
hallmark of amplitude-inhomogeneous models.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import calculus, model
from .calculus import DEFAULT_STENCIL, StencilConfig
from .fields import Grid, HydroState, PhysicsParams, integrate
from .model import Couplings


def _linear_energy_density(state, params, cfg):
    gR = calculus.gradient(state.R, state.grid, cfg)
    gs = model.grad_s_total(state, cfg)
    return (params.hbar**2 / (2.0 * params.mass)) * (
        np.einsum("k...,k...->...", gR, gR)
        + state.rho * np.einsum("k...,k...->...", gs, gs)
    )


def e_ft_density_terms(state: HydroState, params: PhysicsParams, couplings: Couplings,
                       cfg: StencilConfig = DEFAULT_STENCIL) -> dict[str, np.ndarray]:
    """Pointwise contributions to the field-theoretical energy."""
    r = model._Ratios(state, cfg)
    terms = {
        "linear": _linear_energy_density(state, params, cfg),
        "potential": state.rho * params.potential.evaluate(state.grid, params.mass),
        "c1": couplings.c1 * r.lap_s**2,
        "c2": couplings.c2 * r.lap_s * r.u,
        "c3": couplings.c3 * r.lap_s * r.w2,
        "c4": couplings.c4 * r.u**2,
        "c5": couplings.c5 * r.u * r.w2,
        "c6": couplings.c6 * r.w2**2,
    }
    return terms


def e_ft(state: HydroState, params: PhysicsParams, couplings: Couplings,
         cfg: StencilConfig = DEFAULT_STENCIL) -> float:
    terms = e_ft_density_terms(state, params, couplings, cfg)
    return float(integrate(sum(terms.values()), state.grid))


def e_qm(state: HydroState, params: PhysicsParams, couplings: Couplings,
         cfg: StencilConfig = DEFAULT_STENCIL) -> complex:
    """Mean-value energy; the imaginary part (1/2 integral of h_I) is kept.

    On the periodic grid h_I telescopes, so the imaginary part vanishes to
    roundoff; it is reported rather than assumed zero.
    """
    density = _linear_energy_density(state, params, cfg)
    density = density + state.rho * params.potential.evaluate(state.grid, params.mass)
    hi, hr = model.h_i_and_h_r(state, couplings, cfg)
    real = float(integrate(density + 0.5 * hr, state.grid))
    imag = 0.5 * float(integrate(hi, state.grid))
    return complex(real, imag)


def _position_coords(state: HydroState) -> list[np.ndarray]:
    """Per-axis position coordinates in the centered box chart.

    The torus has no global position operator; positions are read in the
    fixed chart x in [-L/2, L/2) with the branch cut at the box edge, and
    scenarios keep packets central. A cut that follows the packet centroid
    would be more general but puts spurious jumps into differentiated
    expectation series whenever background-level density crosses the moving
    cut.
    """
    grid = state.grid
    coords = []
    for k in range(grid.dim):
        shape = [1] * grid.dim
        shape[k] = -1
        coords.append(grid.axis(k).reshape(shape))
    return coords


def expectation_position(state: HydroState) -> np.ndarray:
    """<r> with the minimum-image convention around the packet centroid."""
    from .fields import norm as state_norm

    n = state_norm(state)
    if abs(n - 1.0) > 1e-6:
        warnings.warn(f"state norm is {n:.8f}, expectations assume 1", stacklevel=2)
    coords = _position_coords(state)
    vol = state.grid.cell_volume
    return np.array([float((state.rho * x).sum() * vol / n) for x in coords])


def expectation_momentum(state: HydroState, params: PhysicsParams,
                         cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    """<p> = hbar * integral of rho grad(S)."""
    gs = model.grad_s_total(state, cfg)
    vol = state.grid.cell_volume
    return params.hbar * np.array([float((state.rho * gs[k]).sum() * vol)
                                   for k in range(state.grid.dim)])


def i1(state: HydroState, params: PhysicsParams, couplings: Couplings,
       cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    """Position-weighted nonlinear source: (m/hbar) integral of x h_I."""
    hi = model.h_i(state, couplings, cfg)
    coords = _position_coords(state)
    vol = state.grid.cell_volume
    return (params.mass / params.hbar) * np.array(
        [float((x * hi).sum() * vol) for x in coords]
    )


def i2(state: HydroState, params: PhysicsParams, couplings: Couplings,
       cfg: StencilConfig = DEFAULT_STENCIL) -> tuple[np.ndarray, np.ndarray]:
    """Momentum-relation correction and the separately-reported gradient term.

    Returns (main, grad_term) with
      main      = integral of rho (2 H'_I grad S - grad H'_R)
      grad_term = integral of grad(rho H'_I)   (identically ~0 on the torus)
    H'_I = h_I/(2 rho), H'_R = h_R/(2 rho), floor-clamped.
    """
    grid = state.grid
    hi, hr = model.h_i_and_h_r(state, couplings, cfg)
    rho_c = np.maximum(state.R, state.amplitude_floor()) ** 2
    hp_i = hi / (2.0 * rho_c)
    hp_r = hr / (2.0 * rho_c)
    gs = model.grad_s_total(state, cfg)
    grad_hpr = calculus.gradient(hp_r, grid, cfg)
    vol = grid.cell_volume
    main = np.array([
        float((state.rho * (2.0 * hp_i * gs[k] - grad_hpr[k])).sum() * vol)
        for k in range(grid.dim)
    ])
    grad_field = calculus.gradient(state.rho * hp_i, grid, cfg)
    grad_term = np.array([float(grad_field[k].sum() * vol) for k in range(grid.dim)])
    return main, grad_term


def grad_v_mean(state: HydroState, params: PhysicsParams,
                cfg: StencilConfig = DEFAULT_STENCIL) -> np.ndarray:
    """<grad V>, with the stencil gradient of the tabulated potential.

    Using the same stencil as the dynamics keeps the discrete momentum
    balance closed; the wrap seam of non-periodic potentials only matters
    where rho is negligible.
    """
    V = params.potential.evaluate(state.grid, params.mass)
    gV = calculus.gradient(V, state.grid, cfg)
    vol = state.grid.cell_volume
    return np.array([float((state.rho * gV[k]).sum() * vol)
                     for k in range(state.grid.dim)])


def continuity_current_residual(state: HydroState, params: PhysicsParams,
                                couplings: Couplings,
                                cfg: StencilConfig = DEFAULT_STENCIL) -> float:
    """L-inf of hbar d(rho)/dt + div j.

    The model evolution and the current disagree only through the
    composition order of the coupling stencils (Laplacian-of-Laplacian vs
    divergence-of-gradient), so this is exactly zero at c = 0 and
    O(h^order) otherwise.
    """
    if couplings.c1 == 0.0 and couplings.c2 == 0.0 and couplings.c3 == 0.0:
        return 0.0
    r = model._Ratios(state, cfg)
    q = np.zeros(state.grid.shape)
    if couplings.c1:
        q += 2.0 * couplings.c1 * r.lap_s
    if couplings.c2:
        q += couplings.c2 * r.u
    if couplings.c3:
        q += couplings.c3 * r.w2
    hi = model.h_i(state, couplings, cfg)
    mismatch = hi - calculus.divergence(calculus.gradient(q, state.grid, cfg),
                                        state.grid, cfg)
    return float(np.max(np.abs(mismatch)))


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One timestamped row of scalar diagnostics."""

    t: float
    norm: float
    e_qm_real: float
    e_qm_imag: float
    e_ft: float
    position_mean: tuple[float, ...]
    momentum_mean: tuple[float, ...]
    i1: tuple[float, ...]
    i2: tuple[float, ...]
    i2_grad_term: tuple[float, ...]
    grad_v_mean: tuple[float, ...]
    continuity_residual: float
    ehrenfest_residual_r: tuple[float, ...] | None = None
    ehrenfest_residual_p: tuple[float, ...] | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def diagnostics_record(state: HydroState, params: PhysicsParams,
                       couplings: Couplings,
                       cfg: StencilConfig = DEFAULT_STENCIL) -> DiagnosticsRecord:
    from .fields import norm as state_norm

    eq = e_qm(state, params, couplings, cfg)
    i2_main, i2_grad = i2(state, params, couplings, cfg)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        pos = expectation_position(state)
    return DiagnosticsRecord(
        t=state.t,
        norm=state_norm(state),
        e_qm_real=eq.real,
        e_qm_imag=eq.imag,
        e_ft=e_ft(state, params, couplings, cfg),
        position_mean=tuple(pos),
        momentum_mean=tuple(expectation_momentum(state, params, cfg)),
        i1=tuple(i1(state, params, couplings, cfg)),
        i2=tuple(i2_main),
        i2_grad_term=tuple(i2_grad),
        grad_v_mean=tuple(grad_v_mean(state, params, cfg)),
        continuity_residual=continuity_current_residual(state, params, couplings, cfg),
    )


def _central_derivative(values: np.ndarray, dt: float) -> np.ndarray:
    """4th-order interior time derivative of a uniformly sampled series."""
    n = len(values)
    out = np.full_like(values, np.nan, dtype=np.float64)
    if n >= 5:
        out[2:-2] = (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1]
                     - values[4:]) / (12.0 * dt)
    return out


def fill_ehrenfest_residuals(records: list[DiagnosticsRecord],
                             params: PhysicsParams) -> list[DiagnosticsRecord]:
    """Residuals of the two motion relations from trajectory differencing.

      residual_r = m d<r>/dt - <p> - I1
      residual_p = d<p>/dt + <grad V> - I2

    Derivatives are central differences of the diagnostics series, so this
    check is independent of the evolution right-hand side. Edge records keep
    residual = None.
    """
    if len(records) < 5:
        return list(records)
    ts = np.array([r.t for r in records])
    dts = np.diff(ts)
    # differencing needs uniform spacing; an off-cadence final record (the
    # integrator always logs the last step) is simply left unfilled
    n_uniform = len(records)
    for i in range(1, len(dts)):
        if not np.isclose(dts[i], dts[0], rtol=1e-9, atol=1e-12):
            n_uniform = i + 1
            break
    if n_uniform < 5:
        raise ValueError("ehrenfest residuals need uniformly spaced diagnostics")
    tail = list(records[n_uniform:])
    records = list(records[:n_uniform])
    dt = float(dts[0])
    pos = np.array([r.position_mean for r in records])
    mom = np.array([r.momentum_mean for r in records])
    dim = pos.shape[1]
    dpos = np.column_stack([_central_derivative(pos[:, k], dt) for k in range(dim)])
    dmom = np.column_stack([_central_derivative(mom[:, k], dt) for k in range(dim)])
    out = []
    for i, rec in enumerate(records):
        if np.any(np.isnan(dpos[i])):
            out.append(rec)
            continue
        res_r = params.mass * dpos[i] - mom[i] - np.array(rec.i1)
        res_p = dmom[i] + np.array(rec.grad_v_mean) - np.array(rec.i2)
        out.append(replace(rec, ehrenfest_residual_r=tuple(res_r),
                           ehrenfest_residual_p=tuple(res_p)))
    return out + tail


def write_ndjson(records: list[DiagnosticsRecord], path) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


# --- finite-energy scan -----------------------------------------------------


@dataclass
class ScanResult:
    rows: list[dict]
    exponents: dict[str, float | None]

    def exponent(self, term: str = "total"):
        return self.exponents.get(term)


def _window_mask(grid: Grid, margin_fraction: float) -> np.ndarray:
    """Interior window excluding a margin near the wrap seam.

    Packet families with polynomial phases are smooth in the interior but
    kink across the seam; the windowed quadrature keeps the scan honest.
    """
    mask = np.ones(grid.shape, dtype=bool)
    for k in range(grid.dim):
        x = grid.axis(k)
        half = 0.5 * grid.lengths[k] * (1.0 - 2.0 * margin_fraction)
        shape = [1] * grid.dim
        shape[k] = -1
        mask &= (np.abs(x.reshape(shape)) <= half)
    return mask


def _fit_exponent(Ls, values) -> float | None:
    vals = np.asarray(values, dtype=np.float64)
    if np.any(vals <= 0):
        return None
    slope = np.polyfit(np.log(np.asarray(Ls, dtype=np.float64)), np.log(vals), 1)[0]
    return float(slope)


def finite_energy_scan(state_builder, domain_sizes, params: PhysicsParams,
                       couplings: Couplings, margin_fraction: float = 0.1,
                       cfg: StencilConfig = DEFAULT_STENCIL) -> ScanResult:
    """Windowed e_ft versus domain size, with fitted growth exponents.

    state_builder(L) must return a HydroState of a fixed-shape packet on a
    domain of extent L per axis. The returned exponents hold the log-log
    slope for the total and each contribution (None when a contribution is
    not strictly positive).
    """
    rows = []
    for L in domain_sizes:
        state = state_builder(L)
        mask = _window_mask(state.grid, margin_fraction)
        terms = e_ft_density_terms(state, params, couplings, cfg)
        vol = state.grid.cell_volume
        row = {"L": float(L)}
        for name, density in terms.items():
            row[name] = float((density * mask).sum() * vol)
        row["e_ft"] = float(sum(row[name] for name in terms))
        rows.append(row)
    Ls = [row["L"] for row in rows]
    exponents = {"total": _fit_exponent(Ls, [row["e_ft"] for row in rows])}
    for name in rows[0]:
        if name in ("L", "e_ft"):
            continue
        exponents[name] = _fit_exponent(Ls, [row[name] for row in rows])
    return ScanResult(rows=rows, exponents=exponents)


def write_scan_csv(result: ScanResult, path) -> None:
    fieldnames = list(result.rows[0].keys())
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in result.rows:
            writer.writerow(row)
