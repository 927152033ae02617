"""Ensemble engine: consistency with the single-record path, seeding,
and the stationary-statistics invariants."""

import numpy as np
import pytest

import opo_smoothing as om
from opo_smoothing import montecarlo as mc
from opo_smoothing.estimation import run_retrofilter
from opo_smoothing.montecarlo import EnsembleConfig, run_ensemble
from opo_smoothing.simulate import record_rng


class TestEngineConsistency:
    def test_record_stream_matches_single_record_seeding(self):
        # record r of an ensemble draws from Philox key (seed, r); record 0
        # therefore reproduces the single-record generator stream
        a = record_rng(123).standard_normal(8)
        b = np.random.Generator(
            np.random.Philox(key=np.array([123, 0], dtype=np.uint64))
        ).standard_normal(8)
        np.testing.assert_array_equal(a, b)

    def test_single_record_ensemble_matches_api_path(self, paper_043):
        _, model, sol, _ = paper_043
        cfg = EnsembleConfig(n_records=1, duration=4e-6, seed=77, subsample=64)
        ens = run_ensemble(model, sol, cfg)
        traj, record = om.simulate_true(
            model, sol.v_true, duration=4e-6, seed=77, x0=None
        )
        out = om.estimate_record(model, record, sol)
        idx = (ens.times / record.dt + 0.5).astype(int)
        scale = np.max(np.abs(traj.means))
        assert np.max(np.abs(ens.x_true[0] - traj.means[idx])) < 1e-9 * scale
        assert np.max(np.abs(ens.x_filt[0] - out.filtered.means[idx])) < 1e-9 * scale
        assert np.max(np.abs(ens.x_smooth[0] - out.smoothed.means[idx])) < 1e-9 * scale

    def test_lambda_series_matches_retrofilter(self, paper_043):
        _, model, sol, _ = paper_043
        n = 3000
        dt = om.default_dt(model)
        lam = mc._lambda_series(model, sol, dt, n)
        record = om.MeasurementRecord(dt=dt, y_a=np.zeros(n), y_b=np.zeros(n))
        retro = run_retrofilter(model, record, sol)
        np.testing.assert_allclose(lam, retro.lam, rtol=0, atol=1e-13 * np.linalg.norm(sol.lambda_retro))

    def test_batch_split_invariance(self, paper_043):
        _, model, sol, _ = paper_043
        base = dict(n_records=6, duration=2e-6, seed=5)
        a = run_ensemble(model, sol, EnsembleConfig(**base, records_per_batch=2))
        b = run_ensemble(model, sol, EnsembleConfig(**base, records_per_batch=6))
        np.testing.assert_array_equal(a.x_smooth, b.x_smooth)
        np.testing.assert_array_equal(a.x_true, b.x_true)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EnsembleConfig(n_records=0)
        with pytest.raises(ValueError):
            EnsembleConfig(duration=-1.0)


@pytest.mark.slow
class TestStationaryStatistics:
    def test_moments_agree_on_disjoint_windows(self, ensemble_043):
        _, _, _, _, ens = ensemble_043
        valid_idx = np.nonzero(ens.valid)[0]
        half = len(valid_idx) // 2
        first, second = valid_idx[:half], valid_idx[half:]
        n_eff = ens.x_true.shape[0] * half / 4.0  # ~4 samples per correlation time
        for window in (first, second):
            mean = ens.x_true[:, window].mean(axis=(0, 1))
            std = ens.x_true[:, window].std(axis=(0, 1))
            assert np.all(np.abs(mean) < 5.0 * std / np.sqrt(n_eff))
        var1 = ens.x_true[:, first].var(axis=(0, 1))
        var2 = ens.x_true[:, second].var(axis=(0, 1))
        np.testing.assert_allclose(var1, var2, rtol=6.0 * np.sqrt(2.0 / n_eff))

    def test_true_mean_decomposition(self, ensemble_043):
        # sample Cov(<x>_T) + V_T = V_unc within 5% of V_unc, element-wise
        _, _, sol, v_unc, ens = ensemble_043
        cov, _ = om.metrics.sample_cov_means(ens.x_true, ens.valid)
        scale = np.max(np.abs(v_unc))
        assert np.max(np.abs(cov + sol.v_true - v_unc)) < 0.05 * scale

    def test_empirical_trsd_vanishes_without_hidden_channel(self):
        params = om.paper_defaults(transmittance=1.0)
        model = om.build_model(params)
        sol = om.solve_riccati(model)
        v_unc = om.unconditional_cov(model)
        ens = run_ensemble(model, sol, EnsembleConfig(n_records=20, duration=10e-6, seed=9))
        est, err = mc.empirical_summary(model, sol, v_unc, ens)
        assert abs(est["trsd_f"]) < max(3.0 * err["trsd_f"], 1e-10)
        assert est["mse_f"] < 1e-20
