"""Purity, squeezing, TrSD and recovery metrics."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opo_smoothing import metrics as mx


def rotation(phi: float) -> np.ndarray:
    return np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])


def _sym_cov(e1, e2, phi):
    m = rotation(phi) @ np.diag([e1, e2]) @ rotation(phi).T
    return 0.5 * (m + m.T)


covariances = st.builds(
    _sym_cov,
    e1=st.floats(0.05, 20.0),
    e2=st.floats(0.05, 20.0),
    phi=st.floats(0.0, math.pi),
)


class TestPurity:
    def test_vacuum_is_pure(self):
        assert mx.purity(0.5 * np.eye(2)) == pytest.approx(1.0, abs=1e-14)

    def test_double_vacuum(self):
        assert mx.purity(np.eye(2)) == pytest.approx(0.5, abs=1e-14)

    def test_unconditional_at_paper_pump(self):
        v = 0.5 * np.diag([1.0 / 0.3, 1.0 / 1.7])
        expected = 1.0 / math.sqrt(2.0 * v[0, 0] * 2.0 * v[1, 1])
        assert mx.purity(v) == pytest.approx(expected, rel=1e-12)
        assert mx.purity(v) == pytest.approx(0.714, abs=5e-4)

    def test_rejects_non_pd(self):
        with pytest.raises(ValueError, match="positive definite"):
            mx.purity(np.diag([1.0, -0.5]))

    @given(v=covariances, hbar=st.floats(0.25, 4.0))
    @settings(max_examples=100, deadline=None)
    def test_both_printed_forms_agree(self, v, hbar):
        p = mx.purity(v, hbar)
        alt = hbar / (2.0 * math.sqrt(np.linalg.det(v)))
        assert p == pytest.approx(alt, rel=1e-12)
        assert 0.0 < p


class TestSqueezing:
    def test_vacuum_is_zero_db(self):
        sq = mx.squeezing(0.5 * np.eye(2))
        assert sq.smaller == sq.larger == pytest.approx(1.0)
        assert sq.smaller_db == pytest.approx(0.0, abs=1e-12)

    def test_unconditional_squeezing_level(self):
        v = 0.5 * np.diag([1.0 / 0.3, 1.0 / 1.7])
        sq = mx.squeezing(v)
        assert sq.smaller == pytest.approx(2 * 0.2941176470588235, rel=1e-9)
        assert sq.smaller_db == pytest.approx(-2.30, abs=5e-3)

    @given(v=covariances, phi=st.floats(0.0, 2.0 * math.pi))
    @settings(max_examples=100, deadline=None)
    def test_rotation_invariance(self, v, phi):
        r = rotation(phi)
        sq = mx.squeezing(v)
        sq_rot = mx.squeezing(r @ v @ r.T)
        assert sq_rot.smaller == pytest.approx(sq.smaller, rel=1e-9)
        assert sq_rot.larger == pytest.approx(sq.larger, rel=1e-9)

    @given(v=covariances, hbar=st.floats(0.25, 4.0))
    @settings(max_examples=100, deadline=None)
    def test_purity_squeezing_identity(self, v, hbar):
        sq = mx.squeezing(v, hbar)
        assert sq.smaller <= sq.larger
        p = mx.purity(v, hbar)
        assert p**2 == pytest.approx(1.0 / (sq.smaller * sq.larger), rel=1e-10)

    @given(value=st.floats(1e-6, 1e6))
    @settings(max_examples=100, deadline=None)
    def test_db_roundtrip(self, value):
        assert mx.db_to_eig(mx.eig_to_db(value)) == pytest.approx(value, rel=1e-12)


class TestTrsdTheory:
    def test_zero_for_identical_states(self):
        v = np.diag([1.2, 0.4])
        assert mx.trsd_theory(v, v) == 0.0

    def test_equals_purity_gap(self, paper_043):
        _, _, sol, _ = paper_043
        for v_c in (sol.v_filt, sol.v_smooth):
            gap = mx.purity(sol.v_true) - mx.purity(v_c)
            assert mx.trsd_theory(sol.v_true, v_c) == pytest.approx(gap, abs=1e-13)
        assert mx.trsd_theory(sol.v_true, sol.v_smooth) < mx.trsd_theory(sol.v_true, sol.v_filt)

    def test_rejects_inconsistent_order(self):
        with pytest.raises(ValueError, match="inconsistent"):
            mx.trsd_theory(np.eye(2), 0.4 * np.eye(2))


class TestTrsdEmpirical:
    def test_exact_zero_when_conditionals_match_truth(self):
        rng = np.random.default_rng(0)
        means = rng.normal(size=(4, 50, 2))
        v = np.array([[0.8, 0.1], [0.1, 0.5]])
        value, stderr = mx.trsd_empirical(means, means, v, v)
        assert abs(value) < 1e-14
        assert stderr < 1e-14

    def test_rejects_empty(self):
        with pytest.raises(ValueError, match="no samples"):
            mx.trsd_empirical(
                np.zeros((1, 4, 2)),
                np.zeros((1, 4, 2)),
                np.eye(2),
                np.eye(2),
                valid=np.zeros(4, dtype=bool),
            )

    def test_gaussian_displacement_expectation(self):
        # displaced conditional means with known offset: D has a closed form
        v_t = 0.5 * np.eye(2)
        v_c = 0.5 * np.eye(2)
        offset = np.array([0.7, -0.2])
        true_means = np.zeros((1, 9, 2))
        cond_means = true_means + offset
        value, _ = mx.trsd_empirical(true_means, cond_means, v_t, v_c)
        # D = 2 - 2 exp(-|d|^2/2) for vacuum covariances and fixed offset d
        expected = 2.0 * (1.0 - math.exp(-0.5 * float(offset @ offset)))
        assert value == pytest.approx(expected, rel=1e-12)


class TestRecoveries:
    def test_signs(self):
        f = mx.ConditionalMetrics(purity=0.8, trsd=0.15, squeeze=0.55, antisqueeze=2.5,
                                  squeeze_db=-2.6, antisqueeze_db=4.0)
        s = mx.ConditionalMetrics(purity=0.82, trsd=0.13, squeeze=0.54, antisqueeze=2.4,
                                  squeeze_db=-2.7, antisqueeze_db=3.8)
        rec = mx.recoveries(f, s)
        assert rec.purity == pytest.approx(0.02)
        assert rec.trsd == pytest.approx(0.02)
        assert rec.squeeze == pytest.approx(0.01)
        assert rec.antisqueeze == pytest.approx(0.1)

    def test_zero_without_hidden_channel(self):
        import opo_smoothing as om

        params = om.paper_defaults(transmittance=1.0)
        sol = om.solve_riccati(om.build_model(params))
        f = mx.conditional_metrics(sol.v_filt, sol.v_true)
        s = mx.conditional_metrics(sol.v_smooth, sol.v_true)
        rec = mx.recoveries(f, s)
        assert rec == mx.Recoveries(0.0, 0.0, 0.0, 0.0)

    def test_theory_report_identity(self, paper_043):
        params, _, sol, v_unc = paper_043
        report = mx.theory_report(sol, v_unc, params)
        assert report.recovery_p == pytest.approx(report.recovery_d, abs=1e-13)
        assert report.trsd_f == pytest.approx(report.purity_t - report.purity_f, abs=1e-13)
        assert report.purity_t >= report.purity_s >= report.purity_f > report.purity_unc


class TestReconstruction:
    def test_recovers_planted_covariance(self):
        rng = np.random.default_rng(5)
        v_t = np.array([[1.1, -0.2], [-0.2, 0.6]])
        chol = np.linalg.cholesky(np.array([[0.09, 0.03], [0.03, 0.04]]))
        true_means = rng.normal(size=(200, 400, 2))
        cond_means = true_means + rng.normal(size=(200, 400, 2)) @ chol.T
        recon, stderr = mx.reconstruct_covariance(true_means, cond_means, v_t)
        np.testing.assert_allclose(recon - v_t, chol @ chol.T, atol=6 * np.max(stderr))
        assert np.all(stderr > 0)
