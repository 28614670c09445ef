"""Estimators that turn ensembles into conclusions.

Survival curves of the passage time (censoring handled exactly), log-log
tail-exponent fits, a finite-horizon recurrence/transience verdict from a
horizon-doubling experiment, drift verification reports, and the
phase-diagram sweep over (alpha, beta) cells.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Point, Region, Side, WedgeGeometry
from .kernel import IncrementModel, ReflectionSpec, lattice_model
from .lyapunov import (FunctionKind, LyapunovParams, evaluate_many,
                       make_params, predicted_drift, sign_table)
from .simulate import PassageRecord, SimConfig, empirical_drift, run_ensemble
from .spectral import CovarianceSpec, beta_c, s0 as s0_of

SWEEP_COLUMNS = ["alpha", "beta_plus", "beta_minus", "sigma1_sq", "sigma2_sq",
                 "rho", "beta_c", "s0", "verdict", "S_T", "S_2T",
                 "tail_hat", "tail_se"]
DRIFT_COLUMNS = ["state_x1", "state_x2", "regime", "kind", "empirical",
                 "std_error", "predicted", "ratio", "flag"]

# verdict thresholds (horizon-doubling heuristic); a plateau call needs the
# last-decade decay to stay on the shallow side of the recurrence cut
REC_SLOPE_MAX = -0.05
TRA_SLOPE_MIN = -0.05
TRA_LEVEL_MIN = 0.1
REC_DELTA_RADII = 3.0
TRA_DELTA_RADII = 1.0


@dataclass(frozen=True)
class SurvivalCurve:
    """Empirical S(t) = P(tau > t) on a log-spaced integer grid up to horizon."""

    times: np.ndarray
    s_hat: np.ndarray
    radius: np.ndarray          # one-sigma binomial radii
    horizon: int
    n_walkers: int

    def at(self, t: float) -> float:
        idx = np.searchsorted(self.times, t, side="right") - 1
        if idx < 0:
            return 1.0
        return float(self.s_hat[idx])


@dataclass(frozen=True)
class TailEstimate:
    exponent_hat: float
    std_error: float
    t_lo: float
    t_hi: float
    method: str = "loglog-regression"


class VerdictLabel(enum.Enum):
    RECURRENT_LIKE = "RecurrentLike"
    TRANSIENT_LIKE = "TransientLike"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Verdict:
    label: VerdictLabel
    plateau: float              # S at the doubled horizon
    slope: float                # last-decade log-log slope at the doubled horizon
    delta: float                # S_T(T) - S_2T(2T)
    paired_radius: float
    level_radius: float


def survival(records: list[PassageRecord], horizon: int | None = None,
             points_per_decade: int = 25) -> SurvivalCurve:
    """Survival curve with censored walkers counted as tau > horizon."""
    if not records:
        raise ValueError("survival needs a nonempty record list")
    taus = np.array([r.tau for r in records], dtype=np.int64)
    cens = np.array([r.censored for r in records], dtype=bool)
    inferred = int(taus.max())
    if horizon is None:
        horizon = inferred
    if np.any(taus > horizon) or np.any(taus[cens] != horizon):
        raise ValueError("records are inconsistent with the stated horizon")
    n = len(records)
    n_grid = max(2, int(points_per_decade * math.log10(max(horizon, 2))) + 1)
    times = np.unique(np.round(
        np.logspace(0.0, math.log10(horizon), n_grid)).astype(np.int64))
    times[-1] = horizon
    finite = np.sort(taus[~cens])
    n_cens = int(cens.sum())
    # survivors at t: censored walkers plus finite passage times above t
    above = finite.size - np.searchsorted(finite, times, side="right")
    s_hat = (above + n_cens) / n
    radius = np.sqrt(np.maximum(s_hat * (1.0 - s_hat), 1.0 / n) / n)
    return SurvivalCurve(times=times.astype(float), s_hat=s_hat, radius=radius,
                         horizon=int(horizon), n_walkers=n)


def default_tail_window(curve: SurvivalCurve,
                        decades: float = 1.5) -> tuple[float, float]:
    """Last `decades` decades before the variance guard S < 20/n bites."""
    floor = 20.0 / curve.n_walkers
    ok = curve.s_hat >= floor
    if not np.any(ok):
        raise ValueError("survival drops below the variance guard immediately")
    t_hi = float(curve.times[np.flatnonzero(ok)[-1]])
    t_lo = max(1.0, t_hi / 10 ** decades)
    return t_lo, t_hi


def tail_exponent(curve: SurvivalCurve,
                  window: tuple[float, float] | None = None) -> TailEstimate:
    """Sign-flipped least-squares slope of log S versus log t over the window."""
    if window is None:
        window = default_tail_window(curve)
    t_lo, t_hi = window
    if not (0 < t_lo < t_hi <= curve.horizon):
        raise ValueError(f"window {window} outside the curve support")
    mask = (curve.times >= t_lo) & (curve.times <= t_hi)
    if mask.sum() < 8:
        raise ValueError("tail window holds fewer than 8 grid points")
    s = curve.s_hat[mask]
    if s[-1] <= 0 or np.any(s <= 0):
        raise ValueError(
            "survival hits zero inside the window; shrink t_hi below "
            f"{curve.times[mask][np.argmax(s <= 0)]:.3g}")
    x = np.log(curve.times[mask])
    y = np.log(s)
    xbar = x.mean()
    sxx = float(((x - xbar) ** 2).sum())
    slope = float(((x - xbar) * (y - y.mean())).sum() / sxx)
    resid = y - (y.mean() + slope * (x - xbar))
    dof = max(len(x) - 2, 1)
    se = math.sqrt(float((resid ** 2).sum()) / dof / sxx)
    return TailEstimate(exponent_hat=-slope, std_error=se,
                        t_lo=t_lo, t_hi=t_hi)


def _last_decade_slope(curve: SurvivalCurve) -> float:
    """Log-log slope over the final decade; -inf if S reaches zero there."""
    t_hi = float(curve.times[-1])
    mask = (curve.times >= t_hi / 10.0)
    s = curve.s_hat[mask]
    if s[-1] <= 0:
        return -math.inf
    good = s > 0
    x = np.log(curve.times[mask][good])
    y = np.log(s[good])
    if len(x) < 3:
        return 0.0
    xbar = x.mean()
    return float(((x - xbar) * (y - y.mean())).sum() / ((x - xbar) ** 2).sum())


def classify(curve_T: SurvivalCurve, curve_2T: SurvivalCurve) -> Verdict:
    """Horizon-doubling verdict.

    The two ensembles must share the configuration (and hence the walker
    streams) except for the horizon, so S_T(T) - S_2T(2T) is the paired
    fraction of walkers returning in (T, 2T].  RecurrentLike demands that
    this excess is at least REC_DELTA_RADII paired standard errors and that
    the last-decade slope keeps falling; TransientLike demands stability
    within the joint level radius at a plateau.
    """
    if curve_2T.horizon != 2 * curve_T.horizon:
        raise ValueError("need horizons T and exactly 2T")
    if curve_2T.n_walkers != curve_T.n_walkers:
        raise ValueError("need identical walker counts")
    n = curve_T.n_walkers
    s_t = float(curve_T.s_hat[-1])
    s_2t = float(curve_2T.s_hat[-1])
    delta = s_t - s_2t
    paired = math.sqrt(max(max(delta, 0.0) * (1.0 - max(delta, 0.0)), 1.5 / n) / n)
    level = 2.5758293035489004 * math.sqrt(
        (s_t * (1 - s_t) + s_2t * (1 - s_2t)) / n + 1e-300)
    slope = _last_decade_slope(curve_2T)
    if delta >= REC_DELTA_RADII * paired and slope <= REC_SLOPE_MAX:
        label = VerdictLabel.RECURRENT_LIKE
    elif (s_2t >= TRA_LEVEL_MIN and abs(delta) <= TRA_DELTA_RADII * level
          and slope >= TRA_SLOPE_MIN):
        label = VerdictLabel.TRANSIENT_LIKE
    else:
        label = VerdictLabel.INCONCLUSIVE
    return Verdict(label=label, plateau=s_2t, slope=slope, delta=delta,
                   paired_radius=paired, level_radius=level)


# ---------------------------------------------------------------------------
# Drift verification report.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DriftRow:
    state: Point
    regime: Region
    kind: FunctionKind
    empirical: float
    std_error: float
    predicted: float
    ratio: float
    flag: str


def drift_report(model: IncrementModel, kind: FunctionKind,
                 params: LyapunovParams, probe_states: list[Point],
                 n_samples: int, alpha: float | None = None,
                 master_seed: int = 424241) -> list[DriftRow]:
    """Empirical versus predicted one-step drift at each probe state."""
    if alpha is None:
        alpha = model.refl.alpha
    cov = model.cov_declared
    geom = model.geom
    rows = []
    for i, p in enumerate(probe_states):
        region = model.classify(p)
        if region is Region.OUTSIDE:
            raise ValueError(f"probe {p} lies outside the domain")
        if region is Region.INTERIOR:
            mu = 0.0
        else:
            side = Side.UPPER if region is Region.BOUNDARY_UPPER else Side.LOWER
            mu = model.mu_eff(side)
        pred = predicted_drift(kind, p, region, params, cov, geom, alpha, mu,
                               p_moment=model.p_moment)

        def f(x1s, x2s):
            return evaluate_many(kind, x1s, x2s, params, cov, geom)

        # plain Monte Carlo: the PASS band is calibrated to iid sampling noise
        # (antithetic pairing would resolve the dropped remainder terms)
        emp, se = empirical_drift(model, f, p, n_samples,
                                  master_seed=master_seed, stream_id=i,
                                  antithetic=False)
        ratio = emp / pred.value if pred.value != 0 else math.nan
        if abs(emp - pred.value) <= 3.0 * se:
            flag = "PASS" if se <= abs(pred.value) or pred.value == 0 else "LOW-POWER"
        elif pred.value != 0 and 0.5 <= ratio <= 2.0:
            flag = "PASS"
        else:
            flag = "FAIL"
        rows.append(DriftRow(state=p, regime=region, kind=kind, empirical=emp,
                             std_error=se, predicted=pred.value, ratio=ratio,
                             flag=flag))
    return rows


def drift_rows_to_csv(rows: list[DriftRow], path: str):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DRIFT_COLUMNS)
        for r in rows:
            writer.writerow([repr(r.state.x1), repr(r.state.x2),
                             r.regime.value, r.kind.value, repr(r.empirical),
                             repr(r.std_error), repr(r.predicted),
                             repr(r.ratio), r.flag])


# ---------------------------------------------------------------------------
# Phase-diagram sweep.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSettings:
    """Simulation settings shared by every sweep cell."""

    a_plus: float = 8.0
    a_minus: float = 8.0
    band_width: float = 1.5
    mu_plus: float = 1.0
    mu_minus: float = 1.0
    x0: Point = field(default_factory=lambda: Point(50.0, 0.0))
    horizon: int = 1_000_000
    return_radius: float = 20.0
    n_walkers: int = 1000
    master_seed: int = 20240817
    force_critical: bool = False
    critical_tol: float = 1e-9


@dataclass(frozen=True)
class SweepRow:
    alpha: float
    beta_plus: float
    beta_minus: float
    cov: CovarianceSpec
    beta_c: float
    s0: float
    verdict: str
    s_t: float
    s_2t: float
    tail_hat: float
    tail_se: float


def _critical_signs(cov: CovarianceSpec, alpha: float, geom: WedgeGeometry,
                    settings: SweepSettings) -> str:
    """Report the critical-case drift signs instead of a simulation verdict."""
    beta = max(geom.beta_plus, geom.beta_minus)
    if 0 < beta < 1:
        kind = FunctionKind.G_GAMMA
        gamma = 0.5 * min(beta, 1.0 - beta, 2.0)
        params = make_params(kind, cov, alpha, gamma=gamma)
    else:
        kind = FunctionKind.W_GAMMA
        gamma = 0.5 * (0.5 + min(1 - 1 / (2 * geom.beta_plus),
                                 1 - 1 / (2 * geom.beta_minus), 1.5))
        params = make_params(kind, cov, alpha, gamma=gamma, steep=True)
    table = sign_table(kind, params, cov, geom, alpha,
                       settings.mu_plus, settings.mu_minus)
    fmt = {1: "+", 0: "0", -1: "-"}
    return ("critical-drift-signs[interior={},upper={},lower={}]".format(
        fmt[table[Region.INTERIOR]], fmt[table[Region.BOUNDARY_UPPER]],
        fmt[table[Region.BOUNDARY_LOWER]]))


def sweep_cell(cov: CovarianceSpec, alpha: float, beta: float,
               settings: SweepSettings, cell_seed: int) -> SweepRow:
    bc = beta_c(cov, alpha)
    s0_val = s0_of(cov, alpha, beta)
    geom = WedgeGeometry(settings.a_plus, settings.a_minus, beta, beta,
                         settings.band_width)
    if abs(beta - bc) <= settings.critical_tol and not settings.force_critical:
        verdict = _critical_signs(cov, alpha, geom, settings)
        return SweepRow(alpha, beta, beta, cov, bc, s0_val, verdict,
                        math.nan, math.nan, math.nan, math.nan)
    refl = ReflectionSpec(alpha, settings.mu_plus, settings.mu_minus)
    model = lattice_model(geom, refl, cov)
    cfg_t = SimConfig(settings.x0, settings.horizon, settings.return_radius,
                      settings.n_walkers, cell_seed)
    cfg_2t = SimConfig(settings.x0, 2 * settings.horizon,
                       settings.return_radius, settings.n_walkers, cell_seed)
    curve_t = survival(run_ensemble(model, cfg_t), cfg_t.horizon)
    curve_2t = survival(run_ensemble(model, cfg_2t), cfg_2t.horizon)
    verdict = classify(curve_t, curve_2t)
    tail_hat = tail_se = math.nan
    if verdict.label is VerdictLabel.RECURRENT_LIKE:
        try:
            est = tail_exponent(curve_2t)
            tail_hat, tail_se = est.exponent_hat, est.std_error
        except ValueError:
            pass
    return SweepRow(alpha, beta, beta, cov, bc, s0_val, verdict.label.value,
                    float(curve_t.s_hat[-1]), float(curve_2t.s_hat[-1]),
                    tail_hat, tail_se)


def phase_sweep(cov: CovarianceSpec, alpha_grid: list[float],
                beta_grid: list[float],
                settings: SweepSettings) -> list[SweepRow]:
    """One row per (alpha, beta) cell; failures recorded in-row."""
    rows = []
    for ia, alpha in enumerate(alpha_grid):
        for ib, beta in enumerate(beta_grid):
            cell_seed = (settings.master_seed
                         ^ ((ia * 1_000_003 + ib) * 0x9E3779B97F4A7C15)) & ((1 << 64) - 1)
            try:
                rows.append(sweep_cell(cov, alpha, beta, settings, cell_seed))
            except Exception as exc:  # cell failure must not abort the sweep
                rows.append(SweepRow(alpha, beta, beta, cov,
                                     beta_c(cov, alpha),
                                     s0_of(cov, alpha, beta),
                                     f"error:{exc}", math.nan, math.nan,
                                     math.nan, math.nan))
    return rows


def sweep_to_csv(rows: list[SweepRow], path: str):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_COLUMNS)
        for r in rows:
            writer.writerow([repr(r.alpha), repr(r.beta_plus),
                             repr(r.beta_minus), repr(r.cov.sigma1_sq),
                             repr(r.cov.sigma2_sq), repr(r.cov.rho),
                             repr(r.beta_c), repr(r.s0), r.verdict,
                             repr(r.s_t), repr(r.s_2t), repr(r.tail_hat),
                             repr(r.tail_se)])
