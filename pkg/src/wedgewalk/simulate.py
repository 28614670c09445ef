"""Trajectory driver: passage-time ensembles and one-step drift estimation.

Every walker owns a randomness stream derived from (master_seed, walker_id),
so ensembles are reproducible and independent of execution order or thread
count.  Records carry the passage time to the return ball (censored at the
horizon), the running maximum of the norm, and the final norm.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import Point, Region
from .kernel import IncrementModel, _MASK64, _SEED_MIX

CSV_COLUMNS = ["walker_id", "tau", "censored", "max_norm", "final_norm", "seed"]


@dataclass(frozen=True)
class SimConfig:
    x0: Point
    horizon: int
    return_radius: float
    n_walkers: int
    master_seed: int

    def validate(self, model: IncrementModel):
        if not model.geom.contains(self.x0):
            raise ValueError(f"x0 {self.x0} lies outside the domain")
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.n_walkers < 1:
            raise ValueError("need at least one walker")
        if not 0 <= self.return_radius < self.x0.r:
            raise ValueError("return_radius must be in [0, |x0|)")


@dataclass(frozen=True)
class PassageRecord:
    walker_id: int
    tau: int            # steps to enter the return ball; = horizon if censored
    censored: bool
    max_norm: float
    final_norm: float
    seed_used: int


def _walker_seed(master_seed: int, walker_id: int) -> int:
    return (master_seed ^ (walker_id * _SEED_MIX)) & _MASK64


def run_one(model: IncrementModel, cfg: SimConfig, walker_id: int) -> PassageRecord:
    """Single trajectory; fully determined by (master_seed, walker_id)."""
    cfg.validate(model)
    geom, refl, mdl, steps, cum = model.packed()
    tau, max_norm, final_norm, status = _kernels.run_walker(
        geom, refl, mdl, steps, cum, cfg.x0.x1, cfg.x0.x2,
        cfg.horizon, cfg.return_radius,
        np.uint64(cfg.master_seed & _MASK64), np.uint64(walker_id))
    if status != 0:
        raise RuntimeError(
            f"kernel containment violation: walker {walker_id} left the domain "
            f"near |x| = {final_norm:.6g} (seed {cfg.master_seed})")
    censored = tau < 0
    return PassageRecord(
        walker_id=walker_id,
        tau=cfg.horizon if censored else int(tau),
        censored=censored,
        max_norm=float(max_norm),
        final_norm=float(final_norm),
        seed_used=_walker_seed(cfg.master_seed, walker_id))


def run_ensemble(model: IncrementModel, cfg: SimConfig,
                 strict: bool = True) -> list[PassageRecord]:
    """n_walkers independent trajectories, sorted by walker_id.

    strict=False returns the successful records and leaves failed walker
    ids in the `failures` attribute of the raised-free result (see
    run_ensemble_partial); with strict=True any kernel containment
    violation raises.
    """
    records, failures = run_ensemble_partial(model, cfg)
    if failures and strict:
        raise RuntimeError(
            f"kernel containment violation in walkers {failures[:5]} "
            f"({len(failures)} total)")
    return records


def run_ensemble_partial(model: IncrementModel, cfg: SimConfig
                         ) -> tuple[list[PassageRecord], list[int]]:
    """Like run_ensemble but collects per-walker failures instead of raising."""
    cfg.validate(model)
    geom, refl, mdl, steps, cum = model.packed()
    n = cfg.n_walkers
    taus = np.empty(n, dtype=np.int64)
    max_norms = np.empty(n)
    final_norms = np.empty(n)
    statuses = np.empty(n, dtype=np.int64)
    _kernels.run_batch(
        geom, refl, mdl, steps, cum, cfg.x0.x1, cfg.x0.x2,
        cfg.horizon, cfg.return_radius,
        np.uint64(cfg.master_seed & _MASK64), n,
        taus, max_norms, final_norms, statuses)
    records = []
    failures = []
    for w in range(n):
        if statuses[w] != 0:
            failures.append(w)
            continue
        censored = taus[w] < 0
        records.append(PassageRecord(
            walker_id=w,
            tau=cfg.horizon if censored else int(taus[w]),
            censored=bool(censored),
            max_norm=float(max_norms[w]),
            final_norm=float(final_norms[w]),
            seed_used=_walker_seed(cfg.master_seed, w)))
    return records, failures


def empirical_drift(model: IncrementModel, f, x: Point, n_samples: int,
                    master_seed: int = 7070, stream_id: int = 0,
                    antithetic: bool | None = None,
                    chunk: int = 1 << 20) -> tuple[float, float]:
    """Monte Carlo estimate of E_x[f(xi_1) - f(x)] with its standard error.

    f maps coordinate arrays (x1s, x2s) to values.  Antithetic pairing is
    applied by default at interior states of the shipped models, whose
    interior noise is symmetric; it is never applied at boundary states.
    """
    if n_samples < 10_000:
        raise ValueError("drift estimation needs at least 10^4 samples")
    region = model.classify(x)
    if region is Region.OUTSIDE:
        raise ValueError(f"state {x} lies outside the domain")
    if antithetic is None:
        antithetic = (region is Region.INTERIOR
                      and model.interior_bias == (0.0, 0.0))
    geom, refl, mdl, steps, cum = model.packed()
    fx = float(np.asarray(f(np.array([x.x1]), np.array([x.x2])))[0])
    count = 0
    mean = 0.0
    m2 = 0.0
    done = 0
    code = {Region.INTERIOR: _kernels.INTERIOR,
            Region.BOUNDARY_UPPER: _kernels.BOUNDARY_UPPER,
            Region.BOUNDARY_LOWER: _kernels.BOUNDARY_LOWER}[region]
    out1 = np.empty(chunk)
    out2 = np.empty(chunk)
    sub = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        _kernels.sample_transitions(
            geom, refl, mdl, steps, cum, x.x1, x.x2, code, m,
            np.uint64(master_seed & _MASK64),
            np.uint64((stream_id + sub) & _MASK64), out1[:m], out2[:m])
        vals = np.asarray(f(out1[:m], out2[:m]), dtype=float) - fx
        if antithetic:
            mir1 = 2.0 * x.x1 - out1[:m]
            mir2 = 2.0 * x.x2 - out2[:m]
            vals = 0.5 * (vals + np.asarray(f(mir1, mir2), dtype=float) - fx)
        if np.any(~np.isfinite(vals)):
            k = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise ValueError(
                f"f undefined at sampled successor ({out1[k]}, {out2[k]})")
        # streaming mean / variance merge
        m_count = vals.size
        m_mean = float(vals.mean())
        m_m2 = float(((vals - m_mean) ** 2).sum())
        delta = m_mean - mean
        tot = count + m_count
        mean += delta * m_count / tot
        m2 += m_m2 + delta * delta * count * m_count / tot
        count = tot
        done += m
        sub += 1 << 32
    if count > 1:
        se = math.sqrt(m2 / (count - 1) / count)
    else:
        se = 0.0
    return mean, se


def records_to_csv(records: list[PassageRecord], path: str):
    """Write records with the fixed column order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([r.walker_id, r.tau, int(r.censored),
                             repr(r.max_norm), repr(r.final_norm), r.seed_used])


def records_from_csv(path: str) -> list[PassageRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != CSV_COLUMNS:
            raise ValueError(
                f"unexpected record CSV columns {reader.fieldnames}, "
                f"wanted {CSV_COLUMNS}")
        return [PassageRecord(
            walker_id=int(row["walker_id"]),
            tau=int(row["tau"]),
            censored=bool(int(row["censored"])),
            max_norm=float(row["max_norm"]),
            final_norm=float(row["final_norm"]),
            seed_used=int(row["seed"]),
        ) for row in reader]
