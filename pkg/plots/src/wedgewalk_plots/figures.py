"""Render wedgewalk CSV outputs to figure files.

Read-only consumer of the documented CSV schemas: the sweep table
(phase diagram), passage-time record tables (survival curves), and drift
report tables (prediction ratios).  Input files are never modified and the
rendering is deterministic for fixed inputs.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "wedgewalk-plots"

SWEEP_COLUMNS = ["alpha", "beta_plus", "beta_minus", "sigma1_sq", "sigma2_sq",
                 "rho", "beta_c", "s0", "verdict", "S_T", "S_2T",
                 "tail_hat", "tail_se"]
RECORD_COLUMNS = ["walker_id", "tau", "censored", "max_norm", "final_norm",
                  "seed"]
DRIFT_COLUMNS = ["state_x1", "state_x2", "regime", "kind", "empirical",
                 "std_error", "predicted", "ratio", "flag"]

VERDICT_COLORS = {
    "RecurrentLike": "#1f77b4",
    "TransientLike": "#d62728",
    "Inconclusive": "#7f7f7f",
}


class SchemaError(ValueError):
    """Input CSV does not carry the expected columns."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str                    # "phase-diagram" | "survival" | "drift-ratio"
    inputs: list[str]
    output: str
    overlay_threshold: bool = True
    mark_extrema: bool = False
    options: dict = field(default_factory=dict)


def _read_csv(path: str, expected: list[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = list(reader.fieldnames or [])
        missing = [c for c in expected if c not in names]
        if missing:
            raise SchemaError(
                f"{path}: missing columns {missing}; expected schema {expected}")
        extra = [c for c in names if c not in expected]
        if extra:
            warnings.warn(f"{path}: ignoring unexpected columns {extra}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows, refusing to render")
    return rows


def threshold_overlay(rows: list[dict]) -> tuple[np.ndarray, np.ndarray]:
    """The critical-exponent curve implied by the sweep table itself.

    One (alpha, beta_c) point per distinct alpha, sorted; rendering draws
    this polyline, so the overlay value at any sampled alpha is exactly the
    table's beta_c entry.
    """
    seen: dict[float, float] = {}
    for row in rows:
        seen[float(row["alpha"])] = float(row["beta_c"])
    alphas = np.array(sorted(seen))
    return alphas, np.array([seen[a] for a in alphas])


def plot_phase(spec: FigureSpec) -> str:
    """Scatter of (alpha, beta) cells colored by verdict, with the
    critical-curve overlay."""
    rows = _read_csv(spec.inputs[0], SWEEP_COLUMNS)
    fig, ax = plt.subplots(figsize=(7, 5))
    by_verdict: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        verdict = row["verdict"]
        key = verdict if verdict in VERDICT_COLORS else "other"
        by_verdict.setdefault(key, []).append(
            (float(row["alpha"]), float(row["beta_plus"])))
    for verdict, pts in sorted(by_verdict.items()):
        arr = np.array(pts)
        ax.scatter(arr[:, 0], arr[:, 1], s=60,
                   color=VERDICT_COLORS.get(verdict, "#bcbd22"),
                   label=verdict, zorder=3)
    if spec.overlay_threshold:
        alphas, bc = threshold_overlay(rows)
        style = "-" if len(alphas) > 1 else "none"
        ax.plot(alphas, bc, linestyle=style, marker="_", markersize=18,
                color="black", label="critical exponent", zorder=2)
        if spec.mark_extrema:
            ax.scatter([alphas[np.argmin(bc)], alphas[np.argmax(bc)]],
                       [bc.min(), bc.max()], marker="D", s=50,
                       color="black", zorder=4)
    ax.set_xlabel("reflection angle alpha (rad)")
    ax.set_ylabel("wall exponent beta")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("recurrence/transience phase diagram")
    fig.savefig(spec.output, metadata=_clean_metadata(spec.output))
    plt.close(fig)
    return spec.output


def survival_points(rows: list[dict],
                    points_per_decade: int = 25
                    ) -> tuple[np.ndarray, np.ndarray, int, int]:
    """(times, S, horizon, n) from a record table; censored count as
    tau > horizon."""
    taus = np.array([int(r["tau"]) for r in rows], dtype=np.int64)
    cens = np.array([int(r["censored"]) for r in rows], dtype=bool)
    horizon = int(taus.max())
    n = len(taus)
    n_grid = max(2, int(points_per_decade * math.log10(max(horizon, 2))) + 1)
    times = np.unique(np.round(
        np.logspace(0.0, math.log10(horizon), n_grid)).astype(np.int64))
    finite = np.sort(taus[~cens])
    above = finite.size - np.searchsorted(finite, times, side="right")
    s = (above + cens.sum()) / n
    return times.astype(float), s, horizon, n


def fit_tail_slope(times: np.ndarray, s: np.ndarray, n: int,
                   decades: float = 1.5) -> tuple[float, float, float] | None:
    """Least-squares log-log slope over the last `decades` before S < 20/n.

    Returns (slope, t_lo, t_hi), or None when no stable window exists
    (plateau at 1, or too few points).
    """
    floor = 20.0 / n
    ok = s >= max(floor, 1e-12)
    if not np.any(ok):
        return None
    t_hi = float(times[np.flatnonzero(ok)[-1]])
    t_lo = max(1.0, t_hi / 10 ** decades)
    mask = (times >= t_lo) & (times <= t_hi) & (s > 0)
    if mask.sum() < 8:
        return None
    x = np.log(times[mask])
    y = np.log(s[mask])
    if np.ptp(y) == 0.0:
        return 0.0, t_lo, t_hi
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, t_lo, t_hi


def plot_survival(spec: FigureSpec) -> str:
    """Log-log survival curve(s) with the fitted tail slope annotated."""
    fig, ax = plt.subplots(figsize=(7, 5))
    annotations = []
    for k, path in enumerate(spec.inputs):
        rows = _read_csv(path, RECORD_COLUMNS)
        times, s, horizon, n = survival_points(rows)
        label = spec.options.get("labels", [None] * len(spec.inputs))[k] or path
        ax.plot(times, np.maximum(s, 0.5 / n), drawstyle="steps-post",
                label=label)
        fit = fit_tail_slope(times, s, n)
        all_censored = bool(np.all(s >= 1.0))
        if fit is not None and not all_censored:
            slope, t_lo, t_hi = fit
            annotations.append((k, slope))
            tt = np.array([t_lo, t_hi])
            anchor = s[np.searchsorted(times, t_hi) - 1]
            ax.plot(tt, anchor * (tt / t_hi) ** slope, "--", color="black",
                    linewidth=1)
            ax.annotate(f"slope = {slope:+.3f}",
                        xy=(math.sqrt(t_lo * t_hi),
                            anchor * (t_lo / t_hi) ** (slope / 2)),
                        fontsize=9, textcoords="offset points", xytext=(5, 5))
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("steps t")
    ax.set_ylabel("fraction with passage time > t")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("passage-time survival")
    fig.savefig(spec.output, metadata=_clean_metadata(spec.output))
    plt.close(fig)
    return spec.output


def plot_drift_ratio(spec: FigureSpec) -> str:
    """Empirical/predicted drift ratios by state norm and regime."""
    rows = _read_csv(spec.inputs[0], DRIFT_COLUMNS)
    fig, ax = plt.subplots(figsize=(7, 5))
    by_regime: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        norm = math.hypot(float(row["state_x1"]), float(row["state_x2"]))
        ratio = float(row["ratio"])
        if math.isfinite(ratio):
            by_regime.setdefault(row["regime"], []).append((norm, ratio))
    for regime, pts in sorted(by_regime.items()):
        arr = np.array(sorted(pts))
        ax.plot(arr[:, 0], arr[:, 1], "o-", label=regime)
    ax.axhspan(0.5, 2.0, color="0.9", zorder=0)
    ax.axhline(1.0, color="black", linewidth=1)
    ax.set_xscale("log")
    ax.set_xlabel("|x|")
    ax.set_ylabel("empirical / predicted drift")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("drift verification ratios")
    fig.savefig(spec.output, metadata=_clean_metadata(spec.output))
    plt.close(fig)
    return spec.output


def _clean_metadata(path: str) -> dict:
    # keep renders byte-stable: no creation dates in the output files
    if path.endswith(".svg"):
        return {"Date": None}
    if path.endswith(".png"):
        return {"Software": "wedgewalk-plots"}
    return {}


RENDERERS = {
    "phase-diagram": plot_phase,
    "survival": plot_survival,
    "drift-ratio": plot_drift_ratio,
}


def render(spec: FigureSpec) -> str:
    if spec.kind not in RENDERERS:
        raise ValueError(f"unknown figure kind '{spec.kind}', "
                         f"choose from {sorted(RENDERERS)}")
    return RENDERERS[spec.kind](spec)
