"""Secondary acceptance: figure rendering against the primary's artifacts.

Criterion 14 renders the phase sweep produced by the primary acceptance run
(artifacts/acceptance/sweep_diag14.csv) and checks the threshold overlay
against the table.  Criterion 15 checks the annotated survival slope against
the primary's fitted tail exponent.  When the primary artifacts are absent
(primary acceptance not yet run), statistically equivalent synthetic inputs
exercise the same checks.
"""

import csv
import json
import math
import pathlib

import numpy as np
import pytest

from wedgewalk_plots import (FigureSpec, fit_tail_slope, plot_phase,
                             plot_survival, survival_points,
                             threshold_overlay)
from wedgewalk_plots.figures import RECORD_COLUMNS, SWEEP_COLUMNS, _read_csv

ARTIFACTS = pathlib.Path(__file__).resolve().parents[2] / "artifacts" / "acceptance"


def synthetic_sweep(path):
    rows = [
        dict(alpha="0.0", beta_plus=b, beta_minus=b, sigma1_sq="1.0",
             sigma2_sq="4.0", rho="0.0", beta_c="0.25", s0=s, verdict=v,
             S_T="0.2", S_2T="0.18", tail_hat="nan", tail_se="nan")
        for b, s, v in (("0.1", "0.3", "RecurrentLike"),
                        ("0.5", "-0.5", "TransientLike"),
                        ("2.0", "-3.5", "RecurrentLike"))
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    return path


def synthetic_records(path, s=0.5, n=20_000, horizon=10_000_000, seed=777):
    rng = np.random.default_rng(seed)
    taus = np.ceil(10.0 * rng.uniform(size=n) ** (-1.0 / s)).astype(np.int64)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RECORD_COLUMNS)
        writer.writeheader()
        for i, t in enumerate(taus):
            writer.writerow({"walker_id": i, "tau": min(int(t), horizon),
                             "censored": int(t >= horizon),
                             "max_norm": 100.0, "final_norm": 10.0,
                             "seed": i})
    return path


def reference_tail_fit(path):
    """Independent least-squares oracle over the same default window."""
    rows = _read_csv(str(path), RECORD_COLUMNS)
    times, s, horizon, n = survival_points(rows)
    floor = 20.0 / n
    ok = s >= floor
    t_hi = float(times[np.flatnonzero(ok)[-1]])
    t_lo = max(1.0, t_hi / 10 ** 1.5)
    mask = (times >= t_lo) & (times <= t_hi) & (s > 0)
    coef = np.polyfit(np.log(times[mask]), np.log(s[mask]), 1)
    return float(coef[0])


def test_criterion_14_phase_figure_overlay(tmp_path):
    sweep = ARTIFACTS / "sweep_diag14.csv"
    if not sweep.exists():
        sweep = synthetic_sweep(tmp_path / "sweep_diag14.csv")
    out = tmp_path / "phase.png"
    plot_phase(FigureSpec("phase-diagram", [str(sweep)], str(out)))
    assert out.stat().st_size > 0

    rows = _read_csv(str(sweep), SWEEP_COLUMNS)
    alphas, bc = threshold_overlay(rows)
    # pixel-free check: the overlay at alpha = 0 equals the table's beta_c
    k = int(np.argmin(np.abs(alphas)))
    assert alphas[k] == 0.0
    assert bc[k] == pytest.approx(0.25, abs=1e-12)
    # and the verdicts flip across the overlay value at alpha = 0
    below = {r["verdict"] for r in rows
             if float(r["alpha"]) == 0.0 and float(r["beta_plus"]) < bc[k]}
    above = {r["verdict"] for r in rows
             if float(r["alpha"]) == 0.0
             and bc[k] < float(r["beta_plus"]) < 1.0}
    assert below == {"RecurrentLike"}
    assert above == {"TransientLike"}


@pytest.mark.parametrize("name,s0", [("strip", 0.5), ("sqrt", 0.25)])
def test_criterion_15_survival_slope_annotation(tmp_path, name, s0):
    records = ARTIFACTS / f"records_{name}.csv"
    tail_json = ARTIFACTS / f"tail_{name}.json"
    if records.exists() and tail_json.exists():
        tail_hat = json.loads(tail_json.read_text())["tail_hat"]
    else:
        records = synthetic_records(tmp_path / f"records_{name}.csv", s=s0)
        tail_hat = -reference_tail_fit(records)

    out = tmp_path / f"surv_{name}.svg"
    plot_survival(FigureSpec("survival", [str(records)], str(out)))
    assert out.stat().st_size > 0

    rows = _read_csv(str(records), RECORD_COLUMNS)
    times, s, horizon, n = survival_points(rows)
    fit = fit_tail_slope(times, s, n)
    assert fit is not None
    annotated_slope = fit[0]
    assert abs(-annotated_slope - tail_hat) <= 0.05, (annotated_slope, tail_hat)
