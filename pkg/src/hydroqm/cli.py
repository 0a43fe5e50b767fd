"""Config-driven scenario runner.

Subcommands: run <config.json>, validate <config.json>, schema. A run
executes one named experiment, persists NDJSON diagnostics, snapshots and a
scenario CSV, and exits 0 (pass), 1 (tolerance failure), 2 (numerical
failure) or 3 (config error). HYDROQM_OUTPUT_DIR sets the default output
directory.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, calculus, dynamics, fields, model, observables
from . import separability, stationary, symmetry
from .fields import Grid, HydroState, PhysicsParams, PotentialSpec
from .model import Couplings

SCENARIOS = ("Evolve", "LinearCompare", "StationaryReport", "FiniteEnergyScan",
             "GalileiTest", "SeparabilityTest", "EhrenfestTest")

EXIT_PASS = 0
EXIT_TOLERANCE = 1
EXIT_NUMERICAL = 2
EXIT_CONFIG = 3


class ConfigError(ValueError):
    pass


def _check_keys(d: dict, path: str, required: dict, optional: dict) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    for key in d:
        if key not in required and key not in optional:
            raise ConfigError(f"{path}.{key}: unknown key "
                              f"(allowed: {sorted(required) + sorted(optional)})")
    for key, why in required.items():
        if key not in d:
            raise ConfigError(f"{path}.{key}: missing required key ({why})")


def _number(d, path, key, default=None, positive=False):
    v = d.get(key, default)
    if v is None:
        raise ConfigError(f"{path}.{key}: missing numeric value")
    if not isinstance(v, (int, float)) or isinstance(v, bool):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    if positive and v <= 0:
        raise ConfigError(f"{path}.{key}: must be positive, got {v}")
    return float(v)


@dataclass
class RunConfig:
    scenario: str
    grid: Grid
    physics: PhysicsParams
    couplings: Couplings
    initial_state: dict | None
    integrator: dynamics.IntegratorConfig | None
    scenario_options: dict
    output_dir: Path
    prefix: str
    rng_seed: int
    b_input: list | None  # original b couplings, echoed in the summary


def _parse_potential(d, path) -> PotentialSpec:
    _check_keys(d, path, {"kind": "potential kind"},
                {"omega": None, "depth": None, "width": None, "values": None,
                 "parts": None})
    kind = d["kind"]
    if kind == "free":
        return PotentialSpec(kind="free")
    if kind == "harmonic":
        omega = d.get("omega", 1.0)
        omega = tuple(np.atleast_1d(omega).astype(float))
        return PotentialSpec(kind="harmonic", omega=omega)
    if kind == "box":
        return PotentialSpec(kind="box", depth=_number(d, path, "depth", 1.0),
                             width=_number(d, path, "width", 1.0, positive=True))
    if kind == "tabulated":
        return PotentialSpec(kind="tabulated",
                             values=np.asarray(d.get("values"), dtype=float))
    if kind == "additive":
        parts = d.get("parts")
        if not isinstance(parts, list) or not parts:
            raise ConfigError(f"{path}.parts: additive potential needs parts")
        return PotentialSpec(kind="additive", parts=tuple(
            _parse_potential(p, f"{path}.parts[{i}]") for i, p in enumerate(parts)))
    raise ConfigError(f"{path}.kind: unknown potential kind {kind!r}")


def _parse_couplings(d, path) -> tuple[Couplings, list | None]:
    _check_keys(d, path, {}, {"c": None, "b": None})
    has_c = "c" in d
    has_b = "b" in d
    if has_c and has_b:
        raise ConfigError(f"{path}: give either 'c' or 'b', not both")
    if not has_c and not has_b:
        return Couplings(), None
    vals = d["c"] if has_c else d["b"]
    if not isinstance(vals, list) or len(vals) != 6:
        raise ConfigError(f"{path}.{'c' if has_c else 'b'}: expected 6 numbers")
    vals = [float(v) for v in vals]
    if has_c:
        return Couplings(*vals), None
    return model.couplings_from_b(*vals), vals


def _parse_state_spec(d, path) -> dict:
    kinds = {
        "gaussian": {"center": None, "sigma": None, "k_modes": None,
                     "pedestal": None, "phase_ripple": None},
        "eigenstate": {"index": None},
        "plane_wave": {"k_modes": None},
        "product": {"factors": None},
    }
    _check_keys(d, path, {"kind": "state kind"}, {k: None for ks in kinds.values() for k in ks})
    kind = d.get("kind")
    if kind not in kinds:
        raise ConfigError(f"{path}.kind: unknown state kind {kind!r} "
                          f"(allowed: {sorted(kinds)})")
    for key in d:
        if key != "kind" and key not in kinds[kind]:
            raise ConfigError(f"{path}.{key}: not a {kind} option")
    if kind == "product":
        factors = d.get("factors")
        if not isinstance(factors, list) or len(factors) != 2:
            raise ConfigError(f"{path}.factors: product needs exactly two factors")
        for i, f in enumerate(factors):
            _parse_state_spec(f, f"{path}.factors[{i}]")
    return d


def parse_config(text: str) -> RunConfig:
    """Validate a JSON run specification (strict: unknown keys rejected)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"not valid JSON: {exc}") from exc
    _check_keys(doc, "config",
                {"scenario": "one of " + ", ".join(SCENARIOS),
                 "grid": "grid geometry"},
                {"physics": None, "couplings": None, "initial_state": None,
                 "integrator": None, "scenario_options": None, "output": None,
                 "rng_seed": None})
    scenario = doc["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(f"config.scenario: unknown scenario {scenario!r} "
                          f"(allowed: {list(SCENARIOS)})")

    gd = doc["grid"]
    _check_keys(gd, "config.grid", {"points": "per-axis point counts",
                                    "lengths": "per-axis extents"}, {})
    try:
        grid = Grid(points=tuple(gd["points"]), lengths=tuple(gd["lengths"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config.grid: {exc}") from exc

    pd = doc.get("physics", {})
    _check_keys(pd, "config.physics", {}, {"hbar": None, "mass": None, "potential": None})
    potential = _parse_potential(pd.get("potential", {"kind": "free"}),
                                 "config.physics.potential")
    try:
        physics = PhysicsParams(hbar=_number(pd, "config.physics", "hbar", 1.0, True),
                                mass=_number(pd, "config.physics", "mass", 1.0, True),
                                potential=potential)
    except ValueError as exc:
        raise ConfigError(f"config.physics: {exc}") from exc

    couplings, b_input = _parse_couplings(doc.get("couplings", {}), "config.couplings")

    initial = doc.get("initial_state")
    if initial is not None:
        initial = _parse_state_spec(initial, "config.initial_state")

    integ = None
    if "integrator" in doc:
        idd = doc["integrator"]
        _check_keys(idd, "config.integrator", {"dt": "time step", "t_final": "end time"},
                    {"snapshot_every": None, "diagnostics_every": None,
                     "stability_factor": None})
        try:
            integ = dynamics.IntegratorConfig(
                dt=_number(idd, "config.integrator", "dt", positive=True),
                t_final=_number(idd, "config.integrator", "t_final", positive=True),
                snapshot_every=int(idd.get("snapshot_every", 0)),
                diagnostics_every=int(idd.get("diagnostics_every", 1)),
                stability_factor=float(idd.get("stability_factor", 0.5)),
            )
        except ValueError as exc:
            raise ConfigError(f"config.integrator: {exc}") from exc

    od = doc.get("output", {})
    _check_keys(od, "config.output", {}, {"dir": None, "prefix": None})
    out_dir = Path(od.get("dir") or os.environ.get("HYDROQM_OUTPUT_DIR", "."))
    prefix = od.get("prefix", "run")

    opts = doc.get("scenario_options", {})
    if not isinstance(opts, dict):
        raise ConfigError("config.scenario_options: expected an object")

    cfg = RunConfig(scenario=scenario, grid=grid, physics=physics,
                    couplings=couplings, initial_state=initial, integrator=integ,
                    scenario_options=opts, output_dir=out_dir, prefix=prefix,
                    rng_seed=int(doc.get("rng_seed", 0)), b_input=b_input)
    _validate_scenario(cfg)
    return cfg


_SCENARIO_OPTION_KEYS = {
    "Evolve": {"max_norm_drift": None},
    "LinearCompare": {"tolerance": None},
    "StationaryReport": {"which": None, "max_residual": None},
    "FiniteEnergyScan": {"family": None, "sigma0": None, "t_star": None,
                         "domain_sizes": None, "points_per_length": None,
                         "margin_fraction": None, "expected_exponent": None,
                         "exponent_tolerance": None, "fit_term": None},
    "GalileiTest": {"boost_modes": None, "checkpoint_rolls": None,
                    "steps_per_roll": None, "tolerance": None},
    "SeparabilityTest": {"variant": None, "cubic_strength": None,
                         "max_correlation": None, "min_correlation": None},
    "EhrenfestTest": {"max_residual_r": None, "max_residual_p": None,
                      "i1_rms_tolerance": None},
}

_NEEDS_INTEGRATOR = {"Evolve", "LinearCompare", "GalileiTest",
                     "SeparabilityTest", "EhrenfestTest"}
_NEEDS_STATE = {"Evolve", "LinearCompare", "GalileiTest", "SeparabilityTest",
                "EhrenfestTest"}


def _validate_scenario(cfg: RunConfig) -> None:
    _check_keys(cfg.scenario_options, "config.scenario_options", {},
                _SCENARIO_OPTION_KEYS[cfg.scenario])
    if cfg.scenario in _NEEDS_INTEGRATOR and cfg.integrator is None:
        raise ConfigError(f"config.integrator: required for {cfg.scenario}")
    if cfg.scenario in _NEEDS_STATE and cfg.initial_state is None:
        raise ConfigError(f"config.initial_state: required for {cfg.scenario}")
    if cfg.scenario == "SeparabilityTest":
        if cfg.grid.dim != 2 or (cfg.initial_state or {}).get("kind") != "product":
            raise ConfigError("SeparabilityTest needs a 2D grid and a product state")
    if cfg.scenario == "GalileiTest":
        modes = cfg.scenario_options.get("boost_modes")
        if not modes:
            raise ConfigError("config.scenario_options.boost_modes: required")
        # catch incompatible velocities at config time
        symmetry.BoostSpec.from_modes(modes, cfg.grid, cfg.physics).validate(
            cfg.grid, cfg.physics)
        if cfg.physics.potential.kind != "free":
            raise ConfigError("GalileiTest requires a free potential")


def build_state(grid: Grid, physics: PhysicsParams, spec: dict,
                rng: np.random.Generator) -> HydroState:
    """Construct the configured initial state on the grid."""
    kind = spec["kind"]
    if kind == "plane_wave":
        k_modes = np.atleast_1d(spec.get("k_modes", [0] * grid.dim))
        k0 = tuple(2.0 * np.pi * int(n) / L for n, L in zip(k_modes, grid.lengths))
        R = np.full(grid.shape, 1.0)
        return fields.normalized(HydroState(grid=grid, R=R,
                                            s_residual=np.zeros(grid.shape), k0=k0))
    if kind == "gaussian":
        center = np.atleast_1d(spec.get("center", [0.0] * grid.dim))
        sigma = np.broadcast_to(np.atleast_1d(spec.get("sigma", 1.0)), (grid.dim,))
        k_modes = np.atleast_1d(spec.get("k_modes", [0] * grid.dim))
        ped = float(spec.get("pedestal", 0.0))
        xs = grid.meshgrid()
        rho = np.ones(grid.shape)
        for x, c, s in zip(xs, center, sigma):
            rho = rho * np.exp(-((x - c) ** 2) / (s * s))
        rho = rho + ped * rho.max()
        s_res = np.zeros(grid.shape)
        ripple = spec.get("phase_ripple")
        if ripple:
            _check_keys(ripple, "phase_ripple",
                        {"amplitude": None, "center": None, "width": None}, {})
            rc = np.atleast_1d(ripple["center"])
            w = float(ripple["width"])
            bump = np.ones(grid.shape)
            for x, c in zip(xs, rc):
                bump = bump * np.exp(-((x - c) ** 2) / (2 * w * w))
            s_res = float(ripple["amplitude"]) * bump
        k0 = tuple(2.0 * np.pi * int(n) / L for n, L in zip(k_modes, grid.lengths))
        return fields.normalized(HydroState(grid=grid, R=np.sqrt(rho),
                                            s_residual=s_res, k0=k0))
    if kind == "eigenstate":
        R, E = stationary.linear_eigenstate(physics, grid, int(spec.get("index", 0)))
        return HydroState(grid=grid, R=np.abs(R), s_residual=np.zeros(grid.shape),
                          omega0=E / physics.hbar)
    if kind == "product":
        f1, f2 = spec["factors"]
        g1 = Grid((grid.points[0],), (grid.lengths[0],))
        g2 = Grid((grid.points[1],), (grid.lengths[1],))
        a = build_state(g1, separability.factor_params(physics, 0), f1, rng)
        b = build_state(g2, separability.factor_params(physics, 1), f2, rng)
        return separability.tensor_product(a, b)
    raise ConfigError(f"unknown state kind {kind!r}")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def _persist_trajectory(cfg: RunConfig, traj: dynamics.Trajectory,
                        physics: PhysicsParams) -> dict:
    out = cfg.output_dir
    recs = observables.fill_ehrenfest_residuals(traj.diagnostics, physics)
    observables.write_ndjson(recs, out / f"{cfg.prefix}_diagnostics.ndjson")
    fields.save_state(out / f"{cfg.prefix}_initial", traj.initial)
    fields.save_state(out / f"{cfg.prefix}_final", traj.final)
    first, last = recs[0], recs[-1]
    return {
        "diagnostics_rows": len(recs),
        "final_norm": last.norm,
        "norm_drift": abs(last.norm - first.norm),
        "final_e_ft": last.e_ft,
        "final_e_qm_real": last.e_qm_real,
        "final_e_qm_imag": last.e_qm_imag,
        "max_continuity_residual": max(r.continuity_residual for r in recs),
    }


# --- scenario implementations ----------------------------------------------


def _run_evolve(cfg: RunConfig, rng) -> tuple[bool, dict]:
    state = build_state(cfg.grid, cfg.physics, cfg.initial_state, rng)
    traj = dynamics.evolve(state, cfg.physics, cfg.couplings, cfg.integrator)
    info = _persist_trajectory(cfg, traj, cfg.physics)
    limit = float(cfg.scenario_options.get("max_norm_drift", 1e-7))
    info["max_norm_drift"] = limit
    return info["norm_drift"] < limit, info


def _run_linear_compare(cfg: RunConfig, rng) -> tuple[bool, dict]:
    state = build_state(cfg.grid, cfg.physics, cfg.initial_state, rng)
    if not cfg.couplings.is_zero:
        raise ConfigError("LinearCompare is defined for zero couplings")
    traj = dynamics.evolve(state, cfg.physics, cfg.couplings, cfg.integrator)
    ref = dynamics.linear_reference_evolve(state, cfg.physics, cfg.integrator)
    err = float(np.max(np.abs(traj.final.rho - ref.final.rho)))
    info = _persist_trajectory(cfg, traj, cfg.physics)
    tol = float(cfg.scenario_options.get("tolerance", 1e-6))
    info.update({"linf_rho_error": err, "tolerance": tol})
    rows = [[s.t, float(np.max(np.abs(s.rho - r.rho)))]
            for s, r in zip(traj.snapshots, ref.snapshots)]
    _write_csv(cfg.output_dir / f"{cfg.prefix}_linear_compare.csv",
               ["t", "linf_rho_error"], rows)
    return err < tol, info


def _run_stationary(cfg: RunConfig, rng) -> tuple[bool, dict]:
    which = int(cfg.scenario_options.get("which", 0))
    report = stationary.stationary_report(cfg.physics, cfg.grid, cfg.couplings, which)
    with open(cfg.output_dir / f"{cfg.prefix}_stationary.json", "w") as fh:
        fh.write(report.to_json())
    info = json.loads(report.to_json())
    limit = cfg.scenario_options.get("max_residual")
    ok = True
    if limit is not None and np.isfinite(report.residual_eq_energy):
        ok = report.residual_eq_energy < float(limit)
        info["max_residual"] = float(limit)
    return ok, info


def _run_scan(cfg: RunConfig, rng) -> tuple[bool, dict]:
    opts = cfg.scenario_options
    family = opts.get("family", "evolved_gaussian")
    sigma0 = float(opts.get("sigma0", 1.0))
    t_star = float(opts.get("t_star", 1.0))
    sizes = opts.get("domain_sizes") or [20.0, 30.0, 40.0]
    per_len = float(opts.get("points_per_length", cfg.grid.points[0] / cfg.grid.lengths[0]))
    margin = float(opts.get("margin_fraction", 0.1))
    dim = cfg.grid.dim
    hbar, m = cfg.physics.hbar, cfg.physics.mass

    def builder(L):
        n = int(round(per_len * L))
        grid = Grid((n,) * dim, (L,) * dim)
        xs = grid.meshgrid()
        r2 = sum(x**2 for x in xs)
        if family == "static_gaussian":
            R = np.exp(-r2 / (2.0 * sigma0**2))
            s = np.zeros(grid.shape)
        elif family == "evolved_gaussian":
            # freely-evolved amplitude width and quadratic phase at t_star,
            # for an initial amplitude exp(-r^2 / (2 sigma0^2))
            sig_t2 = sigma0**2 + (hbar * t_star / (m * sigma0)) ** 2
            beta = hbar * t_star / (2.0 * m * sigma0**2 * sig_t2)
            R = np.exp(-r2 / (2.0 * sig_t2))
            s = beta * r2
        else:
            raise ConfigError(f"unknown scan family {family!r}")
        return fields.normalized(HydroState(grid=grid, R=R, s_residual=s))

    result = observables.finite_energy_scan(builder, sizes, cfg.physics,
                                            cfg.couplings, margin)
    observables.write_scan_csv(result, cfg.output_dir / f"{cfg.prefix}_scan.csv")
    term = opts.get("fit_term", "c1" if cfg.couplings.c1 else "total")
    info = {"rows": result.rows, "exponents": result.exponents, "fit_term": term}
    expected = opts.get("expected_exponent")
    ok = True
    if expected is not None:
        tol = float(opts.get("exponent_tolerance", 0.1))
        got = result.exponents.get(term)
        ok = got is not None and abs(got - float(expected)) < tol
        info.update({"expected_exponent": float(expected), "exponent_tolerance": tol})
    return ok, info


def _run_galilei(cfg: RunConfig, rng) -> tuple[bool, dict]:
    opts = cfg.scenario_options
    state = build_state(cfg.grid, cfg.physics, cfg.initial_state, rng)
    spec = symmetry.BoostSpec.from_modes(opts["boost_modes"], cfg.grid, cfg.physics)
    rolls = opts.get("checkpoint_rolls", [10])
    axis = int(np.argmax(np.abs(spec.velocity)))
    tau = cfg.grid.spacing[axis] / abs(spec.velocity[axis])
    steps = int(opts.get("steps_per_roll", max(1, round(tau / cfg.integrator.dt))))
    dt = tau / steps
    checkpoints = [r * tau for r in rolls]
    icfg = dynamics.IntegratorConfig(dt=dt, t_final=checkpoints[-1],
                                     stability_factor=cfg.integrator.stability_factor)
    dev = symmetry.invariance_test(state, spec, cfg.physics, cfg.couplings,
                                   icfg, checkpoints)
    tol = float(opts.get("tolerance", 1e-4))
    info = {"deviation": dev, "tolerance": tol, "checkpoints": checkpoints,
            "boost_velocity": list(spec.velocity), "dt": dt}
    _write_csv(cfg.output_dir / f"{cfg.prefix}_galilei.csv",
               ["max_deviation"], [[dev]])
    return dev < tol, info


def _run_separability(cfg: RunConfig, rng) -> tuple[bool, dict]:
    opts = cfg.scenario_options
    state = build_state(cfg.grid, cfg.physics, cfg.initial_state, rng)
    variant = opts.get("variant", "extended")
    if variant == "extended":
        traj = separability.joint_evolve(state, cfg.physics, cfg.couplings,
                                         cfg.integrator)
    elif variant in ("cubic_factored", "cubic_naive"):
        traj = separability.evolve_cubic(state, cfg.physics, cfg.integrator,
                                         g=float(opts.get("cubic_strength", 1.0)),
                                         variant=variant.removeprefix("cubic_"))
    else:
        raise ConfigError(f"unknown separability variant {variant!r}")
    rows = []
    for snap in traj.snapshots:
        rows.append([snap.t, separability.correlation_metric(snap),
                     fields.norm(snap),
                     observables.e_ft(snap, cfg.physics, cfg.couplings)])
    _write_csv(cfg.output_dir / f"{cfg.prefix}_correlation.csv",
               ["t", "correlation", "joint_norm", "e_ft_joint"], rows)
    info = _persist_trajectory(cfg, traj, cfg.physics)
    corr = rows[-1][1]
    info["final_correlation"] = corr
    ok = True
    if "max_correlation" in opts:
        ok = ok and corr <= float(opts["max_correlation"])
        info["max_correlation"] = float(opts["max_correlation"])
    if "min_correlation" in opts:
        ok = ok and corr >= float(opts["min_correlation"])
        info["min_correlation"] = float(opts["min_correlation"])
    return ok, info


def _run_ehrenfest(cfg: RunConfig, rng) -> tuple[bool, dict]:
    opts = cfg.scenario_options
    state = build_state(cfg.grid, cfg.physics, cfg.initial_state, rng)
    traj = dynamics.evolve(state, cfg.physics, cfg.couplings, cfg.integrator)
    recs = observables.fill_ehrenfest_residuals(traj.diagnostics, cfg.physics)
    observables.write_ndjson(recs, cfg.output_dir / f"{cfg.prefix}_diagnostics.ndjson")
    inner = [r for r in recs if r.ehrenfest_residual_r is not None]
    if not inner:
        raise ConfigError("run too short for differencing; add diagnostics rows")
    res_r = np.array([r.ehrenfest_residual_r for r in inner])
    res_p = np.array([r.ehrenfest_residual_p for r in inner])
    i1s = np.array([r.i1 for r in inner])
    rows = [[r.t, *r.ehrenfest_residual_r, *r.ehrenfest_residual_p, *r.i1, *r.i2]
            for r in inner]
    dim = cfg.grid.dim
    hdr = (["t"] + [f"res_r_{k}" for k in range(dim)]
           + [f"res_p_{k}" for k in range(dim)]
           + [f"i1_{k}" for k in range(dim)] + [f"i2_{k}" for k in range(dim)])
    _write_csv(cfg.output_dir / f"{cfg.prefix}_ehrenfest.csv", hdr, rows)
    info = {
        "max_residual_r": float(np.max(np.abs(res_r))),
        "max_residual_p": float(np.max(np.abs(res_p))),
        "rms_i1": float(np.sqrt(np.mean(i1s**2))),
    }
    ok = True
    if "max_residual_r" in opts:
        ok = ok and info["max_residual_r"] < float(opts["max_residual_r"])
    if "max_residual_p" in opts:
        ok = ok and info["max_residual_p"] < float(opts["max_residual_p"])
    tol = opts.get("i1_rms_tolerance")
    if tol is not None:
        ratio = float(np.sqrt(np.mean(res_r**2)) / max(np.sqrt(np.mean(i1s**2)), 1e-300))
        info["i1_rms_ratio"] = ratio
        ok = ok and ratio < float(tol)
    return ok, info


_RUNNERS = {
    "Evolve": _run_evolve,
    "LinearCompare": _run_linear_compare,
    "StationaryReport": _run_stationary,
    "FiniteEnergyScan": _run_scan,
    "GalileiTest": _run_galilei,
    "SeparabilityTest": _run_separability,
    "EhrenfestTest": _run_ehrenfest,
}


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute the scenario; returns (exit_code, summary)."""
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.rng_seed)
    summary = {
        "scenario": cfg.scenario,
        "version": __version__,
        "stencil_backend": calculus.BACKEND,
        "grid": {"points": list(cfg.grid.points), "lengths": list(cfg.grid.lengths)},
        "couplings_c": list(cfg.couplings.as_tuple()),
        "couplings_b_input": cfg.b_input,
        "gamma_convention": "single-coupling model equals the gamma-form "
                            "equations with gamma = 2*c1",
        "rng_seed": cfg.rng_seed,
    }
    t0 = time.perf_counter()
    try:
        ok, info = _RUNNERS[cfg.scenario](cfg, rng)
        summary.update(info)
        summary["verdict"] = "pass" if ok else "fail"
        code = EXIT_PASS if ok else EXIT_TOLERANCE
    except (dynamics.NumericalError, stationary.ConvergenceError,
            FloatingPointError) as exc:
        summary.update({"verdict": "failed", "error": str(exc)})
        code = EXIT_NUMERICAL
    summary["wall_time_s"] = time.perf_counter() - t0
    with open(cfg.output_dir / f"{cfg.prefix}_summary.json", "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=1, default=float)
    return code, summary


def _apply_overrides(doc: dict, overrides: list[str]) -> dict:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--override needs key=value, got {item!r}")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"--override {key}: {part} is not an object")
        node[parts[-1]] = value
    return doc


def config_schema() -> dict:
    """A JSON-schema-style description of the run configuration."""
    state_kinds = ["gaussian", "eigenstate", "plane_wave", "product"]
    return {
        "$comment": "hydroqm run configuration",
        "type": "object",
        "required": ["scenario", "grid"],
        "properties": {
            "scenario": {"enum": list(SCENARIOS)},
            "grid": {"type": "object",
                     "required": ["points", "lengths"],
                     "properties": {"points": {"type": "array", "items": {"type": "integer"}},
                                    "lengths": {"type": "array", "items": {"type": "number"}}}},
            "physics": {"type": "object",
                        "properties": {"hbar": {"type": "number", "exclusiveMinimum": 0},
                                       "mass": {"type": "number", "exclusiveMinimum": 0},
                                       "potential": {"type": "object",
                                                     "properties": {"kind": {"enum": ["free", "harmonic", "box", "tabulated", "additive"]}}}}},
            "couplings": {"type": "object",
                          "$comment": "either c or b, six numbers; b is converted",
                          "properties": {"c": {"type": "array"}, "b": {"type": "array"}}},
            "initial_state": {"type": "object",
                              "properties": {"kind": {"enum": state_kinds}}},
            "integrator": {"type": "object",
                           "required": ["dt", "t_final"],
                           "properties": {"dt": {"type": "number"},
                                          "t_final": {"type": "number"},
                                          "snapshot_every": {"type": "integer"},
                                          "diagnostics_every": {"type": "integer"},
                                          "stability_factor": {"type": "number"}}},
            "scenario_options": {"type": "object",
                                 "$comment": {s: sorted(k) for s, k in _SCENARIO_OPTION_KEYS.items()}},
            "output": {"type": "object",
                       "properties": {"dir": {"type": "string"},
                                      "prefix": {"type": "string"}}},
            "rng_seed": {"type": "integer"},
        },
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="hydroqm",
                                     description="config-driven scenario runner")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute a scenario")
    p_run.add_argument("config", help="path to a JSON run configuration")
    p_run.add_argument("--output-dir", default=None)
    p_run.add_argument("--quiet", action="store_true")
    p_run.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE", help="dotted-path config override")
    p_val = sub.add_parser("validate", help="check a configuration and exit")
    p_val.add_argument("config")
    p_val.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE")
    sub.add_parser("schema", help="print the configuration schema as JSON")
    args = parser.parse_args(argv)

    if args.command == "schema":
        print(json.dumps(config_schema(), indent=1, sort_keys=True))
        return EXIT_PASS

    try:
        doc = json.loads(Path(args.config).read_text())
        doc = _apply_overrides(doc, args.override)
        if getattr(args, "output_dir", None):
            doc.setdefault("output", {})["dir"] = args.output_dir
        cfg = parse_config(json.dumps(doc))
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(f"ok: {cfg.scenario} on {cfg.grid.points} grid")
        return EXIT_PASS

    code, summary = run(cfg)
    if not args.quiet:
        print(json.dumps(summary, indent=1, sort_keys=True, default=float))
    return code


if __name__ == "__main__":
    sys.exit(main())
