"""Batch command-line front end.

Subcommands: phase (threshold algebra, no simulation), simulate (passage-time
ensemble to CSV), drift-check (empirical versus predicted drift table),
sweep (phase-diagram CSV over an (alpha, beta) grid), audit (moment audit of
a kernel in JSON).  Every command is reproducible from the config file and
the master seed; exit codes are 0 success, 2 config/validation error,
3 runtime partial failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .analysis import (SweepSettings, drift_report, drift_rows_to_csv,
                       phase_sweep, sweep_to_csv)
from .geometry import Point, Region, WedgeGeometry
from .kernel import ReflectionSpec, continuous_model, lattice_model, moment_audit
from .lyapunov import FunctionKind, DriftPreconditionError, make_params, probe_state
from .simulate import SimConfig, records_to_csv, run_ensemble_partial
from .spectral import (CovarianceSpec, Thresholds, bc_extrema, beta_c,
                       derived_angles, s0)

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


def _get(cfg: dict, path: str, required: bool = True, default=None):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if required:
                raise ConfigError(f"missing config entry '{path}'")
            return default
        node = node[part]
    return node


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    version = cfg.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version: expected {SCHEMA_VERSION}, got {version}")
    return cfg


def _covariance(cfg: dict) -> CovarianceSpec:
    try:
        return CovarianceSpec(
            sigma1_sq=float(_get(cfg, "covariance.sigma1_sq")),
            sigma2_sq=float(_get(cfg, "covariance.sigma2_sq")),
            rho=float(_get(cfg, "covariance.rho", required=False, default=0.0)))
    except ValueError as exc:
        raise ConfigError(f"covariance: {exc}") from exc


def _geometry(cfg: dict) -> WedgeGeometry:
    try:
        geom = WedgeGeometry(
            a_plus=float(_get(cfg, "geometry.a_plus")),
            a_minus=float(_get(cfg, "geometry.a_minus")),
            beta_plus=float(_get(cfg, "geometry.beta_plus")),
            beta_minus=float(_get(cfg, "geometry.beta_minus")),
            band_width=float(_get(cfg, "geometry.band_width")))
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from exc
    if 1.0 in (geom.beta_plus, geom.beta_minus):
        print("warning: wall exponent exactly 1 is outside the supported "
              "phase classification; results are exploratory", file=sys.stderr)
    return geom


def _reflection(cfg: dict) -> ReflectionSpec:
    try:
        return ReflectionSpec(
            alpha=float(_get(cfg, "reflection.alpha")),
            mu_plus=float(_get(cfg, "reflection.mu_plus", required=False,
                               default=1.0)),
            mu_minus=float(_get(cfg, "reflection.mu_minus", required=False,
                                default=1.0)))
    except ValueError as exc:
        raise ConfigError(f"reflection: {exc}") from exc


def _model(cfg: dict):
    geom = _geometry(cfg)
    refl = _reflection(cfg)
    cov = _covariance(cfg)
    family = _get(cfg, "model.family", required=False, default="lattice")
    p_moment = float(_get(cfg, "model.p", required=False, default=4.0))
    try:
        if family == "lattice":
            model = lattice_model(geom, refl, cov, p_moment=p_moment)
        elif family == "continuous":
            bias = _get(cfg, "model.interior_bias", required=False,
                        default=[0.0, 0.0])
            model = continuous_model(
                geom, refl, cov,
                jump_scale=float(_get(cfg, "model.jump_scale")),
                interior_bias=(float(bias[0]), float(bias[1])),
                p_moment=p_moment)
        else:
            raise ConfigError(f"model.family: unknown family '{family}'")
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    return model


def _sim_config(cfg: dict, seed_override: int | None) -> SimConfig:
    x0 = _get(cfg, "simulation.x0")
    seed = int(_get(cfg, "simulation.master_seed"))
    if seed_override is not None:
        seed = seed_override
    return SimConfig(
        x0=Point(float(x0[0]), float(x0[1])),
        horizon=int(_get(cfg, "simulation.horizon")),
        return_radius=float(_get(cfg, "simulation.return_radius")),
        n_walkers=int(_get(cfg, "simulation.n_walkers")),
        master_seed=seed)


def _json_dump(obj, path: str):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_phase(cfg: dict, out_dir: str, args) -> int:
    cov = _covariance(cfg)
    alpha = float(_get(cfg, "reflection.alpha", required=False, default=0.0))
    n_grid = int(_get(cfg, "phase.alpha_points", required=False, default=181))
    grid = np.linspace(-math.pi / 2, math.pi / 2, n_grid)
    bc_min, bc_max, argmin, argmax = bc_extrema(cov)
    ang = derived_angles(cov, alpha)
    beta = None
    if "geometry" in cfg:
        geom = _geometry(cfg)
        beta = max(geom.beta_plus, geom.beta_minus)
    thresholds = Thresholds(
        beta_c=beta_c(cov, alpha),
        s0=s0(cov, alpha, beta) if beta is not None else math.nan,
        bc_min=bc_min, bc_max=bc_max)
    report = {
        "alpha": alpha,
        "beta_c": thresholds.beta_c,
        "s0": None if beta is None else thresholds.s0,
        "beta": beta,
        "bc_min": thresholds.bc_min,
        "bc_max": thresholds.bc_max,
        "bc_argmin": argmin,
        "bc_argmax": argmax,
        "derived_angles": {
            "theta1": ang.theta1, "theta2": ang.theta2, "theta3": ang.theta3,
            "d": ang.d, "eta0": ang.eta0, "eta1": ang.eta1},
        "grid": {"alpha": grid.tolist(),
                 "beta_c": [beta_c(cov, a) for a in grid]},
    }
    _json_dump(report, os.path.join(out_dir, "phase.json"))
    return 0


def cmd_simulate(cfg: dict, out_dir: str, args) -> int:
    model = _model(cfg)
    sim = _sim_config(cfg, args.seed)
    try:
        sim.validate(model)
    except ValueError as exc:
        raise ConfigError(f"simulation: {exc}") from exc
    records, failures = run_ensemble_partial(model, sim)
    records_to_csv(records, os.path.join(out_dir, "records.csv"))
    if failures:
        for w in failures:
            print(f"walker {w}: kernel containment violation", file=sys.stderr)
        return 3
    return 0


_KINDS = {k.value: k for k in FunctionKind}
_REGIMES = {"interior": Region.INTERIOR,
            "boundary_upper": Region.BOUNDARY_UPPER,
            "boundary_lower": Region.BOUNDARY_LOWER}


def cmd_drift_check(cfg: dict, out_dir: str, args) -> int:
    model = _model(cfg)
    kind_name = _get(cfg, "drift.kind")
    if kind_name not in _KINDS:
        raise ConfigError(f"drift.kind: unknown kind '{kind_name}', "
                          f"choose from {sorted(_KINDS)}")
    kind = _KINDS[kind_name]
    params = make_params(
        kind, model.cov_declared, model.refl.alpha,
        w=float(_get(cfg, "drift.w", required=False, default=0.0)),
        gamma=float(_get(cfg, "drift.gamma", required=False, default=1.0)),
        lam=float(_get(cfg, "drift.lam", required=False, default=0.0)),
        nu=float(_get(cfg, "drift.nu", required=False, default=0.0)),
        steep=bool(_get(cfg, "drift.steep", required=False, default=False)))
    norms = [float(v) for v in _get(cfg, "drift.probe_norms")]
    regimes = [str(v) for v in _get(
        cfg, "drift.regimes", required=False, default=list(_REGIMES))]
    probes = []
    for name in regimes:
        if name not in _REGIMES:
            raise ConfigError(f"drift.regimes: unknown regime '{name}'")
        for norm in norms:
            p = probe_state(model.geom, _REGIMES[name], norm)
            if model.family == "lattice":
                p = _snap_to_lattice(model, p, _REGIMES[name])
            probes.append(p)
    n_samples = int(_get(cfg, "drift.n_samples", required=False,
                         default=1_000_000))
    seed = args.seed if args.seed is not None else int(
        _get(cfg, "simulation.master_seed", required=False, default=99991))
    try:
        rows = drift_report(model, kind, params, probes, n_samples,
                            master_seed=seed)
    except DriftPreconditionError as exc:
        raise ConfigError(f"drift: {exc}") from exc
    drift_rows_to_csv(rows, os.path.join(out_dir, "drift_report.csv"))
    return 0


def _snap_to_lattice(model, p: Point, region: Region) -> Point:
    """Nearest integer state of the requested regime."""
    cx, cy = round(p.x1), round(p.x2)
    for radius in range(0, 8):
        for dx in range(-radius, radius + 1):
            for dy in range(-radius, radius + 1):
                if max(abs(dx), abs(dy)) != radius:
                    continue
                q = Point(float(cx + dx), float(cy + dy))
                if model.geom.contains(q) and model.classify(q) is region:
                    return q
    raise ConfigError(f"no lattice state of regime {region} near {p}")


def cmd_sweep(cfg: dict, out_dir: str, args) -> int:
    cov = _covariance(cfg)
    alpha_grid = [float(a) for a in _get(cfg, "sweep.alpha_grid")]
    beta_grid = [float(b) for b in _get(cfg, "sweep.beta_grid")]
    for b in beta_grid:
        if b < 0:
            raise ConfigError("sweep.beta_grid: exponents must be nonnegative")
    sim = cfg.get("simulation", {})
    seed = int(sim.get("master_seed", 20240817))
    if args.seed is not None:
        seed = args.seed
    x0 = sim.get("x0", [50.0, 0.0])
    settings = SweepSettings(
        a_plus=float(_get(cfg, "geometry.a_plus", required=False, default=8.0)),
        a_minus=float(_get(cfg, "geometry.a_minus", required=False, default=8.0)),
        band_width=float(_get(cfg, "geometry.band_width", required=False,
                              default=1.5)),
        mu_plus=float(_get(cfg, "reflection.mu_plus", required=False, default=1.0)),
        mu_minus=float(_get(cfg, "reflection.mu_minus", required=False,
                            default=1.0)),
        x0=Point(float(x0[0]), float(x0[1])),
        horizon=int(sim.get("horizon", 1_000_000)),
        return_radius=float(sim.get("return_radius", 20.0)),
        n_walkers=int(sim.get("n_walkers", 1000)),
        master_seed=seed,
        force_critical=bool(_get(cfg, "sweep.force_critical", required=False,
                                 default=False)))
    rows = phase_sweep(cov, alpha_grid, beta_grid, settings)
    sweep_to_csv(rows, os.path.join(out_dir, "sweep.csv"))
    for row in rows:
        print(f"alpha={row.alpha:+.4f} beta={row.beta_plus:.4f} "
              f"beta_c={row.beta_c:.4f} -> {row.verdict}")
    return 0


def cmd_audit(cfg: dict, out_dir: str, args) -> int:
    model = _model(cfg)
    norms = [float(v) for v in _get(cfg, "audit.probe_norms", required=False,
                                    default=[100.0, 1000.0, 10000.0])]
    n_samples = int(_get(cfg, "audit.n_samples", required=False,
                         default=100_000))
    band_const = float(_get(cfg, "audit.boundary_band_const", required=False,
                            default=8.0))
    states = []
    for region in (Region.INTERIOR, Region.BOUNDARY_UPPER,
                   Region.BOUNDARY_LOWER):
        for norm in norms:
            p = probe_state(model.geom, region, norm)
            if model.family == "lattice":
                p = _snap_to_lattice(model, p, region)
            states.append(p)
    seed = args.seed if args.seed is not None else int(
        _get(cfg, "simulation.master_seed", required=False, default=31337))
    # sharpened-rate compatibility: interior means are also held to the
    # O(|x|^(-1-epsilon)) band for a user-chosen epsilon
    epsilon = float(_get(cfg, "model.epsilon", required=False, default=0.5))
    audit = moment_audit(model, states, n_samples, master_seed=seed,
                         boundary_band_const=band_const)
    sharp_ok = {}
    for e in audit.entries:
        if e.region.value == "interior":
            band = band_const * max(e.state.r, 1.0) ** (-1.0 - epsilon)
            sharp_ok[(e.state.x1, e.state.x2)] = bool(
                np.all(np.abs(e.mean) <= e.mean_radius + band))
    report = {
        "p_moment": audit.p_moment,
        "epsilon": epsilon,
        "passed": audit.passed,
        "entries": [{
            "state": [e.state.x1, e.state.x2],
            "region": e.region.value,
            "n": e.n,
            "mean": e.mean.tolist(),
            "cov": e.cov.tolist(),
            "pth_moment": e.pth_moment,
            "mean_radius_99": e.mean_radius.tolist(),
            "target_mean": e.target_mean.tolist(),
            "deviation": e.deviation,
            "scaled_deviation": e.scaled_deviation,
            "cov_deviation_op": e.cov_deviation,
            "sharpened_rate_compatible": sharp_ok.get((e.state.x1, e.state.x2)),
            "ok": e.ok,
        } for e in audit.entries],
    }
    _json_dump(report, os.path.join(out_dir, "audit.json"))
    if not audit.passed:
        print("audit failed: assumption violation at probe states",
              file=sys.stderr)
        return 3
    return 0


_COMMANDS = {
    "phase": cmd_phase,
    "simulate": cmd_simulate,
    "drift-check": cmd_drift_check,
    "sweep": cmd_sweep,
    "audit": cmd_audit,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="wedgewalk",
        description="Reflecting random walks in curvilinear wedges: "
                    "thresholds, drift checks, ensembles, phase diagrams.")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config path")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (speed only, never results)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config master seed")
    args = parser.parse_args(argv)

    if args.threads is not None:
        if args.threads < 1:
            print("config error: --threads must be positive", file=sys.stderr)
            return 2
        import numba
        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))

    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        return _COMMANDS[args.command](cfg, args.out, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
