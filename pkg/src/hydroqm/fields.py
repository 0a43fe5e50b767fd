"""Grids, hydrodynamic field storage and wavefunction conversion.

A state is stored as an amplitude field R >= 0 plus a phase split into an
affine background k0.x - omega0*t and a periodic residual field. Plane waves
and boosts live entirely in the background, so derivatives act analytically
on it and numerically on the residual only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

# Relative amplitude floor: denominators R, R^2, R^3 are clamped at
# FLOOR_REL * max(R). Nodes of R make ratios like lap(R)/R singular and the
# continuum model gives no prescription there.
FLOOR_REL = 1e-8


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular periodic lattice in 1, 2 or 3 dimensions."""

    points: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        pts = tuple(int(n) for n in np.atleast_1d(self.points))
        lens = tuple(float(x) for x in np.atleast_1d(self.lengths))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "lengths", lens)
        if not 1 <= len(pts) <= 3:
            raise ValueError("grid dimension must be 1, 2 or 3")
        if len(pts) != len(lens):
            raise ValueError("points and lengths must agree per axis")
        if any(n < 8 for n in pts):
            raise ValueError("need at least 8 points per axis")
        if any(length <= 0 for length in lens):
            raise ValueError("axis lengths must be positive")

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(length / n for length, n in zip(self.lengths, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    def axis(self, k: int) -> np.ndarray:
        """Coordinates along axis k, centered: x in [-L/2, L/2)."""
        n, length = self.points[k], self.lengths[k]
        return -0.5 * length + (length / n) * np.arange(n)

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*[self.axis(k) for k in range(self.dim)], indexing="ij"))

    def wavenumbers(self) -> list[np.ndarray]:
        """FFT wavenumber grids per axis (for the spectral reference evolver)."""
        return [2.0 * np.pi * np.fft.fftfreq(n, d=h)
                for n, h in zip(self.points, self.spacing)]


def integrate(values: np.ndarray, grid: Grid):
    """Riemann sum over the periodic grid (exact discrete measure)."""
    return values.sum(axis=tuple(range(-grid.dim, 0))) * grid.cell_volume


@dataclass(frozen=True)
class HydroState:
    """Amplitude R and phase k0.x - omega0*t + s_residual at time t.

    Treated as an immutable value: operations return new states and never
    write into the stored arrays.
    """

    grid: Grid
    R: np.ndarray
    s_residual: np.ndarray
    k0: tuple[float, ...] = None
    omega0: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        R = np.asarray(self.R, dtype=np.float64)
        s = np.asarray(self.s_residual, dtype=np.float64)
        if R.shape != self.grid.shape or s.shape != self.grid.shape:
            raise ValueError("field shapes must match the grid")
        if np.any(R < 0):
            raise ValueError("amplitude field must be nonnegative")
        k0 = self.k0 if self.k0 is not None else (0.0,) * self.grid.dim
        k0 = tuple(float(k) for k in np.atleast_1d(k0))
        if len(k0) != self.grid.dim:
            raise ValueError("k0 must have one component per axis")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "s_residual", s)
        object.__setattr__(self, "k0", k0)

    @property
    def rho(self) -> np.ndarray:
        return self.R**2

    def total_phase(self) -> np.ndarray:
        """S(x, t) = k0.x - omega0*t + s_residual(x)."""
        s = self.s_residual - self.omega0 * self.t
        for k, k0k in enumerate(self.k0):
            if k0k != 0.0:
                shape = [1] * self.grid.dim
                shape[k] = -1
                s = s + k0k * self.grid.axis(k).reshape(shape)
        return s

    def amplitude_floor(self) -> float:
        m = float(self.R.max())
        return FLOOR_REL * m if m > 0 else FLOOR_REL

    def floor_mask(self) -> np.ndarray:
        """Points where R sits below the amplitude floor (flagged, not fatal)."""
        return self.R < self.amplitude_floor()

    def with_time(self, t: float) -> "HydroState":
        return replace(self, t=t)


@dataclass(frozen=True)
class PotentialSpec:
    """External potential. kind in {free, harmonic, box, tabulated, additive}.

    harmonic: 0.5*m*sum(omega_k^2 x_k^2), omega per axis.
    box: smooth well of given depth and width (logistic walls), so the
         potential stays periodic-friendly.
    tabulated: explicit array matching the grid.
    additive: one 1D part per axis, V = sum_k V_k(x_k); used by the
         two-subsystem experiments.
    """

    kind: str = "free"
    omega: tuple[float, ...] | float = 1.0
    depth: float = 1.0
    width: float = 1.0
    values: np.ndarray | None = None
    parts: tuple["PotentialSpec", ...] = ()

    def evaluate(self, grid: Grid, mass: float) -> np.ndarray:
        if self.kind == "free":
            return np.zeros(grid.shape)
        if self.kind == "harmonic":
            om = np.broadcast_to(np.atleast_1d(self.omega), (grid.dim,))
            xs = grid.meshgrid()
            return 0.5 * mass * sum((o * x) ** 2 for o, x in zip(om, xs))
        if self.kind == "box":
            a = 0.05 * self.width  # wall steepness
            xs = grid.meshgrid()
            well = np.ones(grid.shape)
            for x in xs:
                well *= 1.0 / (1.0 + np.exp((np.abs(x) - 0.5 * self.width) / a))
            return -self.depth * well
        if self.kind == "tabulated":
            v = np.asarray(self.values, dtype=np.float64)
            if v.shape != grid.shape:
                raise ValueError("tabulated potential shape does not match grid")
            return v
        if self.kind == "additive":
            if len(self.parts) != grid.dim:
                raise ValueError("additive potential needs one 1D part per axis")
            total = np.zeros(grid.shape)
            for k, part in enumerate(self.parts):
                sub = Grid((grid.points[k],), (grid.lengths[k],))
                shape = [1] * grid.dim
                shape[k] = -1
                total = total + part.evaluate(sub, mass).reshape(shape)
            return total
        raise ValueError(f"unknown potential kind {self.kind!r}")


@dataclass(frozen=True)
class PhysicsParams:
    hbar: float = 1.0
    mass: float = 1.0
    potential: PotentialSpec = field(default_factory=PotentialSpec)

    def __post_init__(self):
        if self.hbar <= 0 or self.mass <= 0:
            raise ValueError("hbar and mass must be positive")


def _unwrap_nd(phase: np.ndarray) -> np.ndarray:
    out = phase
    for ax in range(phase.ndim):
        out = np.unwrap(out, axis=ax)
    return out


def from_wavefunction(re, im, grid: Grid, k0=None, t: float = 0.0) -> HydroState:
    """Split psi = re + i*im into amplitude and branch-continuous phase.

    A known plane-wave background k0 is removed analytically before taking
    the argument, so the stored residual stays small and unwrap-friendly.
    """
    re = np.asarray(re, dtype=np.float64)
    im = np.asarray(im, dtype=np.float64)
    if re.shape != grid.shape or im.shape != grid.shape:
        raise ValueError("wavefunction shape does not match grid")
    psi = re + 1j * im
    if k0 is not None:
        phase_bg = np.zeros(grid.shape)
        for k, k0k in enumerate(np.atleast_1d(k0)):
            shape = [1] * grid.dim
            shape[k] = -1
            phase_bg = phase_bg + float(k0k) * grid.axis(k).reshape(shape)
        psi = psi * np.exp(-1j * phase_bg)
    R = np.abs(psi)
    s = _unwrap_nd(np.angle(psi))
    return HydroState(grid=grid, R=R, s_residual=s, k0=k0, t=t)


def to_wavefunction(state: HydroState) -> tuple[np.ndarray, np.ndarray]:
    S = state.total_phase()
    return state.R * np.cos(S), state.R * np.sin(S)


def norm(state: HydroState) -> float:
    """Total probability sum(R^2) * cell volume."""
    return float(integrate(state.rho, state.grid))


def normalized(state: HydroState) -> HydroState:
    n = norm(state)
    if n <= 0:
        raise ValueError("cannot normalize a zero state")
    return replace(state, R=state.R / np.sqrt(n))


# --- snapshot persistence -------------------------------------------------
#
# 1D/2D fields go to CSV with a one-line JSON header comment; 3D fields go to
# raw little-endian float64 with a JSON sidecar.


def _meta(grid: Grid, name: str, t: float) -> dict:
    return {
        "dim": grid.dim,
        "shape": list(grid.points),
        "lengths": list(grid.lengths),
        "spacing": list(grid.spacing),
        "field": name,
        "t": t,
    }


def save_field(path, values: np.ndarray, grid: Grid, name: str, t: float = 0.0) -> None:
    path = Path(path)
    values = np.asarray(values, dtype=np.float64)
    if grid.dim <= 2:
        header = "# " + json.dumps(_meta(grid, name, t), sort_keys=True)
        data = np.atleast_2d(values)
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row in data:
                fh.write(",".join(repr(v) for v in row) + "\n")
    else:
        values.astype("<f8").tofile(path)
        with open(path.with_suffix(path.suffix + ".json"), "w") as fh:
            json.dump(_meta(grid, name, t), fh, sort_keys=True, indent=1)


def load_field(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    if sidecar.exists():
        with open(sidecar) as fh:
            meta = json.load(fh)
        values = np.fromfile(path, dtype="<f8").reshape(meta["shape"])
        return values, meta
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# "):
            raise ValueError(f"{path} is missing the metadata header")
        meta = json.loads(header[2:])
        values = np.array(
            [[float(v) for v in line.split(",")] for line in fh if line.strip()]
        )
    values = values.reshape(meta["shape"])
    return values, meta


def save_state(prefix, state: HydroState) -> None:
    """Persist R and the phase residual side by side, plus background metadata."""
    prefix = Path(prefix)
    ext = ".csv" if state.grid.dim <= 2 else ".f64"
    save_field(prefix.with_name(prefix.name + "_R" + ext), state.R, state.grid, "R", state.t)
    save_field(
        prefix.with_name(prefix.name + "_s" + ext),
        state.s_residual,
        state.grid,
        "s_residual",
        state.t,
    )
    meta = {"k0": list(state.k0), "omega0": state.omega0, "t": state.t}
    with open(prefix.with_name(prefix.name + "_background.json"), "w") as fh:
        json.dump(meta, fh, sort_keys=True, indent=1)
