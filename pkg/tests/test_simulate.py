"""Simulator: unconditional state, noise stream, determinism, guards."""

import math

import numpy as np
import pytest

import opo_smoothing as om
from opo_smoothing.model import ModelMatrices
from opo_smoothing.simulate import MeasurementRecord, default_dt, simulate_true


class TestUnconditionalCov:
    def test_vacuum_at_zero_pump(self):
        params = om.SystemParams.from_effective(gamma=1.0, xi=0.0, eta_a=0.0, eta_b=0.0)
        v = om.unconditional_cov(om.build_model(params))
        np.testing.assert_allclose(v, 0.5 * np.eye(2), rtol=1e-14)

    def test_closed_form_at_paper_pump(self):
        params = om.paper_defaults()
        model = om.build_model(params)
        v = om.unconditional_cov(model)
        expected = 0.5 * np.diag([1.0 / 0.3, 1.0 / 1.7])
        np.testing.assert_allclose(v, expected, rtol=1e-12)
        # p quadrature sits ~2.3 dB below vacuum
        assert 10.0 * math.log10(v[1, 1] / 0.5) == pytest.approx(-2.30, abs=5e-3)
        residual = model.a_mat @ v + v @ model.a_mat.T + model.q_mat
        assert np.linalg.norm(residual) < 1e-12 * np.linalg.norm(model.q_mat)

    def test_threshold_limit_halves_vacuum(self):
        params = om.SystemParams.from_effective(gamma=1.0, xi=0.9999, eta_a=0.0, eta_b=0.0)
        v = om.unconditional_cov(om.build_model(params))
        assert v[1, 1] == pytest.approx(0.25, rel=2e-4)

    def test_rejects_above_threshold_drift(self):
        bad = ModelMatrices(
            a_mat=np.diag([0.1, -1.0]),
            q_mat=np.eye(2),
            c_a=np.zeros(2),
            c_b=np.zeros(2),
            r_a=1.0,
            r_b=1.0,
            s_a=np.zeros(2),
            s_b=np.zeros(2),
        )
        with pytest.raises(ValueError, match="Hurwitz"):
            om.unconditional_cov(bad)


@pytest.fixture(scope="module")
def quiet_model():
    """No monitoring: records are pure Wiener noise."""
    params = om.SystemParams.from_effective(gamma=1.0, xi=0.0, eta_a=0.0, eta_b=0.0)
    model = om.build_model(params)
    return model, om.unconditional_cov(model)


class TestSimulateTrue:
    def test_noise_moments(self, quiet_model):
        model, v_unc = quiet_model
        _, record = simulate_true(model, v_unc, duration=1000.0, seed=42)
        dw = record.y_a * record.dt
        n = len(dw)
        assert abs(dw.mean()) < 4.0 * math.sqrt(record.dt / n)
        assert dw.var() / record.dt == pytest.approx(1.0, rel=1e-2)
        dw_b = record.y_b * record.dt
        assert dw_b.var() / record.dt == pytest.approx(1.0, rel=1e-2)

    def test_unmonitored_mean_decays_deterministically(self, quiet_model):
        model, v_unc = quiet_model
        traj, _ = simulate_true(
            model, v_unc, duration=30.0, seed=0, x0=np.array([2.0, -1.0])
        )
        # zero gain: the recursion is x_{k+1} = (1 + a dt) x_k exactly
        decay = (1.0 + np.diag(model.a_mat) * traj.times[1]) ** np.arange(len(traj.times))[:, None]
        np.testing.assert_allclose(traj.means, np.array([2.0, -1.0]) * decay, rtol=1e-10)
        assert np.max(np.abs(traj.means[-1])) < 1e-5

    def test_determinism(self, paper_043):
        _, model, sol, _ = paper_043
        t1, r1 = simulate_true(model, sol.v_true, duration=2e-6, seed=9)
        t2, r2 = simulate_true(model, sol.v_true, duration=2e-6, seed=9)
        assert np.array_equal(r1.y_a, r2.y_a)
        assert np.array_equal(r1.y_b, r2.y_b)
        assert np.array_equal(t1.means, t2.means)
        _, r3 = simulate_true(model, sol.v_true, duration=2e-6, seed=10)
        assert not np.array_equal(r1.y_a, r3.y_a)

    def test_duration_bookkeeping(self, paper_043):
        _, model, sol, _ = paper_043
        dt = default_dt(model)
        _, record = simulate_true(model, sol.v_true, duration=1e-6, dt=dt, seed=1)
        assert len(record) == round(1e-6 / dt)
        assert record.duration == pytest.approx(len(record) * dt)

    def test_integrator_guard(self, paper_043):
        _, model, sol, _ = paper_043
        with pytest.raises(ValueError, match="dt too coarse"):
            simulate_true(model, sol.v_true, duration=1e-5, dt=1e-8, seed=0)

    def test_rejects_non_pd_covariance(self, paper_043):
        _, model, _, _ = paper_043
        with pytest.raises(ValueError, match="positive-definite"):
            simulate_true(model, np.diag([1.0, -0.1]), duration=1e-6, seed=0)

    def test_burn_in_flagging(self, paper_043):
        _, model, sol, _ = paper_043
        traj, record = simulate_true(model, sol.v_true, duration=2e-6, seed=2)
        assert record.burn_in > 0
        assert not traj.valid[: record.burn_in].any()
        assert traj.valid[record.burn_in :].all()


class TestMeasurementRecord:
    def test_rejects_mismatched_channels(self):
        with pytest.raises(ValueError, match="equal-length"):
            MeasurementRecord(dt=1e-9, y_a=np.zeros(5), y_b=np.zeros(4))

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="at least one sample"):
            MeasurementRecord(dt=1e-9, y_a=np.zeros(0), y_b=np.zeros(0))

    def test_rejects_bad_dt(self):
        with pytest.raises(ValueError, match="dt"):
            MeasurementRecord(dt=0.0, y_a=np.zeros(5), y_b=np.zeros(5))
