import math

import numpy as np
import pytest

from wedgewalk.analysis import (DRIFT_COLUMNS, SWEEP_COLUMNS, SurvivalCurve,
                                SweepSettings, VerdictLabel, classify,
                                default_tail_window, drift_report,
                                drift_rows_to_csv, phase_sweep, survival,
                                sweep_to_csv, tail_exponent)
from wedgewalk.geometry import Point, WedgeGeometry
from wedgewalk.kernel import ReflectionSpec, lattice_model
from wedgewalk.lyapunov import FunctionKind, make_params
from wedgewalk.simulate import PassageRecord
from wedgewalk.spectral import CovarianceSpec


def fake_records(taus, horizon):
    return [PassageRecord(walker_id=i, tau=min(int(t), horizon),
                          censored=t >= horizon, max_norm=100.0,
                          final_norm=10.0, seed_used=i)
            for i, t in enumerate(taus)]


def pareto_taus(rng, n, s, t0=10.0):
    # P(tau > t) = (t/t0)^(-s) for t >= t0
    return np.ceil(t0 * rng.uniform(size=n) ** (-1.0 / s)).astype(np.int64)


def synthetic_curve(times, s_vals, horizon, n):
    times = np.asarray(times, dtype=float)
    s_vals = np.asarray(s_vals, dtype=float)
    radius = np.sqrt(np.maximum(s_vals * (1 - s_vals), 1.0 / n) / n)
    return SurvivalCurve(times=times, s_hat=s_vals, radius=radius,
                         horizon=horizon, n_walkers=n)


class TestSurvival:
    def test_all_immediate_returns(self):
        curve = survival(fake_records([1] * 100, 1000), 1000)
        assert curve.s_hat[0] == 0.0
        assert np.all(curve.s_hat == 0.0)

    def test_all_censored(self):
        curve = survival(fake_records([2000] * 50, 1000), 1000)
        assert np.all(curve.s_hat == 1.0)

    def test_nonincreasing_and_exact_fractions(self, rng):
        taus = rng.integers(1, 5000, size=1000)
        curve = survival(fake_records(taus, 10_000), 10_000)
        assert np.all(np.diff(curve.s_hat) <= 0)
        for t, s in zip(curve.times[::7], curve.s_hat[::7]):
            assert s == pytest.approx(np.mean(taus > t))

    def test_pareto_matches_power_law(self, rng):
        s = 0.5
        n = 20_000
        taus = pareto_taus(rng, n, s)
        horizon = 10_000_000
        curve = survival(fake_records(taus, horizon), horizon)
        mask = (curve.times > 100) & (curve.s_hat > 50 / n)
        expect = np.minimum((curve.times[mask] / 10.0) ** -s, 1.0)
        resid = np.abs(curve.s_hat[mask] - expect)
        assert np.all(resid <= 5 * curve.radius[mask] + 2.0 / n)

    def test_inconsistent_horizon_rejected(self):
        with pytest.raises(ValueError, match="horizon"):
            survival(fake_records([5, 2000], 1000), 999)


class TestTailExponent:
    @pytest.mark.parametrize("s", [0.1, 0.25, 0.5])
    def test_recovers_pareto_exponent(self, s):
        rng = np.random.default_rng(hash(s) % 2 ** 32)
        n = 100_000
        horizon = 10_000_000
        taus = pareto_taus(rng, n, s)
        curve = survival(fake_records(taus, horizon), horizon)
        est = tail_exponent(curve)
        assert est.exponent_hat == pytest.approx(s, abs=max(4 * est.std_error, 0.02))

    def test_synthetic_hand_window(self, rng):
        taus = pareto_taus(rng, 100_000, 0.5)
        curve = survival(fake_records(taus, 10_000_000), 10_000_000)
        est = tail_exponent(curve, window=(1e3, 1e5))
        assert est.exponent_hat == pytest.approx(0.5, abs=0.02)

    def test_plateau_gives_zero_slope(self):
        curve = survival(fake_records([20_000_000] * 1000, 10_000_000),
                         10_000_000)
        est = tail_exponent(curve, window=(10.0, 1e6))
        assert est.exponent_hat == 0.0

    def test_exponential_data_window_sensitivity(self, rng):
        taus = np.ceil(rng.exponential(3000.0, size=50_000)).astype(int)
        horizon = 1_000_000
        curve = survival(fake_records(np.maximum(taus, 1), horizon), horizon)
        early = tail_exponent(curve, window=(10.0, 1000.0))
        late = tail_exponent(curve, window=(2000.0, 20000.0))
        gap = abs(late.exponent_hat - early.exponent_hat)
        assert gap > 3 * (early.std_error + late.std_error)

    def test_zero_inside_window_rejected(self):
        taus = [10] * 999 + [500]
        curve = survival(fake_records(taus, 100_000), 100_000)
        with pytest.raises(ValueError, match="shrink"):
            tail_exponent(curve, window=(100.0, 100_000.0))

    def test_too_few_points_rejected(self):
        curve = survival(fake_records([100] * 50 + [100_000] * 50, 100_000),
                         100_000)
        with pytest.raises(ValueError, match="fewer than 8"):
            tail_exponent(curve, window=(50.0, 70.0))

    def test_default_window_respects_variance_guard(self, rng):
        taus = pareto_taus(rng, 1000, 0.5)
        curve = survival(fake_records(taus, 10_000_000), 10_000_000)
        t_lo, t_hi = default_tail_window(curve)
        assert curve.at(t_hi) >= 20 / 1000
        assert t_lo == pytest.approx(t_hi / 10 ** 1.5, rel=1e-9)


def power_curve_pair(s, n=1000, T=1_000_000, t0=2000.0, floor=0.0):
    times_T = np.unique(np.round(np.logspace(0, math.log10(T), 120)))
    times_2T = np.unique(np.round(np.logspace(0, math.log10(2 * T), 124)))

    def s_of(t):
        return np.minimum(1.0, floor + (1 - floor) * (np.maximum(t, t0) / t0) ** -s)

    return (synthetic_curve(times_T, s_of(times_T), T, n),
            synthetic_curve(times_2T, s_of(times_2T), 2 * T, n))


class TestClassify:
    def test_power_law_decay_is_recurrent_like(self):
        ct, c2t = power_curve_pair(0.3)
        assert classify(ct, c2t).label is VerdictLabel.RECURRENT_LIKE

    def test_plateau_is_transient_like(self):
        ct, c2t = power_curve_pair(1.0, t0=300.0, floor=0.55)
        v = classify(ct, c2t)
        assert v.label is VerdictLabel.TRANSIENT_LIKE

    def test_low_plateau_is_inconclusive(self):
        # stabilized but at level 0.05: thresholds deliberately not met
        ct, c2t = power_curve_pair(1.0, t0=300.0, floor=0.05)
        assert classify(ct, c2t).label is VerdictLabel.INCONCLUSIVE

    def test_monotone_in_decay_evidence(self):
        # strictly stronger decay never flips RecurrentLike to TransientLike
        for s in (0.1, 0.2, 0.3, 0.4, 0.5):
            ct, c2t = power_curve_pair(s)
            label = classify(ct, c2t).label
            assert label in (VerdictLabel.RECURRENT_LIKE,
                             VerdictLabel.INCONCLUSIVE)
            if s > 0.1:
                assert label is VerdictLabel.RECURRENT_LIKE

    def test_config_mismatch_rejected(self):
        ct, c2t = power_curve_pair(0.3)
        with pytest.raises(ValueError, match="2T"):
            classify(ct, ct)
        bad = synthetic_curve(c2t.times, c2t.s_hat, c2t.horizon, 999)
        with pytest.raises(ValueError, match="walker"):
            classify(ct, bad)


class TestDriftReport:
    @pytest.fixture(scope="class")
    def model(self):
        geom = WedgeGeometry(8.0, 8.0, 0.5, 0.5, 1.5)
        return lattice_model(geom, ReflectionSpec(0.0, 1.0, 1.0),
                             CovarianceSpec(1, 1, 0))

    def test_gamma_one_interior_passes_with_zero_prediction(self, model):
        params = make_params(FunctionKind.FW_GAMMA, model.cov_declared, 0.0,
                             w=0.5, gamma=1.0)
        rows = drift_report(model, FunctionKind.FW_GAMMA, params,
                            [Point(200.0, 0.0), Point(2000.0, 0.0)], 20_000)
        for row in rows:
            assert row.predicted == 0.0
            assert row.flag == "PASS"
            assert abs(row.empirical) <= 3 * row.std_error

    def test_low_power_flagged(self, model):
        # interior log-log drift is ~1e-8: hopeless at 2e4 samples
        params = make_params(FunctionKind.ELL, model.cov_declared, 0.0)
        rows = drift_report(model, FunctionKind.ELL, params,
                            [Point(1000.0, 0.0)], 20_000)
        assert rows[0].flag in ("LOW-POWER", "PASS")
        assert rows[0].std_error > abs(rows[0].predicted)

    def test_csv_schema(self, model, tmp_path):
        params = make_params(FunctionKind.FW_GAMMA, model.cov_declared, 0.0,
                             w=0.5, gamma=1.0)
        rows = drift_report(model, FunctionKind.FW_GAMMA, params,
                            [Point(200.0, 0.0)], 20_000)
        path = tmp_path / "drift.csv"
        drift_rows_to_csv(rows, str(path))
        header = path.read_text().splitlines()[0]
        assert header == ",".join(DRIFT_COLUMNS)


class TestPhaseSweep:
    def test_small_sweep_rows_and_csv(self, tmp_path):
        settings = SweepSettings(band_width=3.5, horizon=20_000, n_walkers=40,
                                 master_seed=31415)
        rows = phase_sweep(CovarianceSpec(1, 4, 0), [0.0], [0.1, 0.5],
                           settings)
        assert len(rows) == 2
        assert {r.beta_plus for r in rows} == {0.1, 0.5}
        for r in rows:
            assert r.beta_c == pytest.approx(0.25)
            assert r.verdict in {v.value for v in VerdictLabel}
        path = tmp_path / "sweep.csv"
        sweep_to_csv(rows, str(path))
        header = path.read_text().splitlines()[0]
        assert header == ",".join(SWEEP_COLUMNS)

    def test_critical_cell_reports_drift_signs(self):
        settings = SweepSettings(horizon=10_000, n_walkers=20)
        rows = phase_sweep(CovarianceSpec(1, 4, 0), [0.0], [0.25], settings)
        assert rows[0].verdict.startswith("critical-drift-signs")
        assert "upper=-" in rows[0].verdict

    def test_cell_failure_recorded_in_row(self):
        # beta grid with an unsimulatable cell (band too thin for the steps)
        settings = SweepSettings(band_width=1.0, horizon=5000, n_walkers=10)
        rows = phase_sweep(CovarianceSpec(1, 4, 0), [0.0], [0.1], settings)
        assert rows[0].verdict.startswith("error:")
