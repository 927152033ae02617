"""Parameter validation, matrix construction and the noise sum rules."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import opo_smoothing as om
from opo_smoothing.model import SystemParams, build_model, paper_defaults


TWO_PI = 2.0 * math.pi


class TestSystemParams:
    def test_rejects_xi_at_threshold(self):
        with pytest.raises(ValueError, match="xi"):
            SystemParams(gamma=1.0, xi=1.0)

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(gamma=0.0, xi=0.5),
            dict(gamma=-1.0, xi=0.5),
            dict(gamma=1.0, xi=-0.1),
            dict(gamma=1.0, xi=0.5, transmittance=1.5),
            dict(gamma=1.0, xi=0.5, loss_a=1.0),
            dict(gamma=1.0, xi=0.5, loss_b=-0.2),
            dict(gamma=1.0, xi=0.5, escape_eff=0.0),
            dict(gamma=1.0, xi=0.5, hbar=0.0),
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SystemParams(**kwargs)

    def test_effective_route_rejects_overfull(self):
        with pytest.raises(ValueError):
            SystemParams.from_effective(gamma=1.0, xi=0.5, eta_a=0.6, eta_b=0.6)

    def test_param_file_roundtrip(self, tmp_path):
        params = paper_defaults(transmittance=0.3, theta_a_deg=10.0, theta_b_deg=170.0)
        path = tmp_path / "params.txt"
        om.save_params(params, path)
        loaded = om.load_params(path)
        assert loaded == params

    def test_param_file_rejects_unknown_key(self, tmp_path):
        path = tmp_path / "params.txt"
        path.write_text("gamma = 1.0\nxi = 0.1\nbogus = 3\n")
        with pytest.raises(ValueError, match="bogus"):
            om.load_params(path)


class TestEfficiencies:
    def test_paper_prefactors(self):
        # eta_A = 0.865 T, eta_B = 0.863 (1 - T) to the printed digits
        full = paper_defaults(transmittance=1.0)
        assert full.eta_a == pytest.approx(0.865, abs=5e-4)
        assert full.eta_b == 0.0
        blocked = paper_defaults(transmittance=0.0)
        assert blocked.eta_a == 0.0
        assert blocked.eta_b == pytest.approx(0.863, abs=5e-4)
        half = paper_defaults(transmittance=0.5)
        assert half.eta_a + half.eta_b <= 1.0

    def test_half_transmittance(self):
        # the paper's eta_A = 0.43 setting sits at T ~= 1/2
        half = paper_defaults(transmittance=0.5)
        assert half.eta_a == pytest.approx(0.4325, abs=5e-4)
        assert round(om.transmittance_for_eta_a(0.43), 2) == 0.5

    def test_escape_efficiency_from_cavity_table(self):
        params = paper_defaults()
        assert params.escape_eff == pytest.approx(0.973, abs=5e-4)
        assert params.gamma == pytest.approx(TWO_PI * 5.0e6)

    def test_from_cavity_matches_preset_rate(self):
        params = SystemParams.from_cavity(
            output_coupler=0.100,
            intracavity_loss=0.00282,
            round_trip_m=0.489,
            parametric_gain=11.4,
        )
        # gamma = c (T_c + L_c) / (2 l) lands on the quoted 5.0 MHz HWHM
        assert params.gamma / TWO_PI == pytest.approx(5.0e6, rel=5e-3)
        assert params.xi == pytest.approx(0.70, abs=5e-3)
        assert params.escape_eff == pytest.approx(0.973, abs=5e-4)


class TestBuildModel:
    def test_no_pump_no_monitoring(self):
        params = SystemParams.from_effective(gamma=1.0, xi=0.0, eta_a=0.0, eta_b=0.0)
        m = build_model(params)
        assert np.array_equal(m.a_mat, -np.eye(2))
        assert np.array_equal(m.q_mat, np.eye(2))
        assert np.array_equal(m.c_a, np.zeros(2))
        assert np.array_equal(m.c_b, np.zeros(2))

    def test_drift_at_paper_pump(self):
        m = build_model(paper_defaults())
        expected = np.diag([-TWO_PI * 1.5e6, -TWO_PI * 8.5e6])
        np.testing.assert_allclose(m.a_mat, expected, rtol=1e-12)

    def test_measurement_row_shape(self):
        params = paper_defaults(transmittance=0.5, theta_a_deg=65.0)
        m = build_model(params)
        amp = math.sqrt(4.0 * params.gamma * params.eta_a / params.hbar)
        np.testing.assert_allclose(
            m.c_a,
            [amp * math.cos(math.radians(65.0)), amp * math.sin(math.radians(65.0))],
            rtol=1e-12,
        )

    def test_sum_rule_printed_example(self):
        params = SystemParams(
            gamma=1.0, xi=0.3, transmittance=0.5, loss_a=0.135, theta_a=0.0
        )
        m = build_model(params)
        assert m.d_a @ m.d_a == pytest.approx(1.0, abs=1e-15)

    def test_deterministic(self):
        params = paper_defaults(transmittance=0.37, theta_a_deg=12.0)
        m1, m2 = build_model(params), build_model(params)
        for name in ("a_mat", "q_mat", "c_a", "c_b", "s_a", "s_b", "b_mat", "d_a", "d_b"):
            assert np.array_equal(getattr(m1, name), getattr(m2, name))

    def test_effective_route_has_no_noise_rows(self):
        params = SystemParams.from_effective(gamma=1.0, xi=0.5, eta_a=0.3, eta_b=0.4)
        m = build_model(params)
        assert m.b_mat is None and m.d_a is None and m.d_b is None
        assert m.c_a @ m.c_a == pytest.approx(4.0 * 0.3)


@given(
    transmittance=st.floats(0.0, 1.0),
    loss_a=st.floats(0.0, 0.99),
    loss_b=st.floats(0.0, 0.99),
    escape_eff=st.floats(0.01, 1.0),
    theta_a=st.floats(0.0, math.pi),
    theta_b=st.floats(0.0, math.pi),
    xi=st.floats(0.0, 0.99),
    hbar=st.floats(0.1, 10.0),
)
@settings(max_examples=200, deadline=None)
def test_noise_identities_on_random_grid(
    transmittance, loss_a, loss_b, escape_eff, theta_a, theta_b, xi, hbar
):
    """S_m = -(hbar/2) C_m, the D sum rule and the A/B orthogonality
    hold across the whole physical parameter space."""
    params = SystemParams(
        gamma=1.0,
        xi=xi,
        transmittance=transmittance,
        loss_a=loss_a,
        loss_b=loss_b,
        escape_eff=escape_eff,
        theta_a=theta_a,
        theta_b=theta_b,
        hbar=hbar,
    )
    m = build_model(params)
    np.testing.assert_array_equal(m.s_a, -0.5 * hbar * m.c_a)
    np.testing.assert_array_equal(m.s_b, -0.5 * hbar * m.c_b)
    assert m.d_a @ m.d_a == pytest.approx(1.0, abs=1e-12)
    assert m.d_b @ m.d_b == pytest.approx(1.0, abs=1e-12)
    assert m.d_a @ m.d_b == pytest.approx(0.0, abs=1e-12)
    # provenance: the summary covariances match the noise decomposition
    np.testing.assert_allclose(m.b_mat @ m.b_mat.T, m.q_mat, rtol=0, atol=1e-12 * hbar)
    scale = max(np.max(np.abs(m.s_a)), 1.0)
    np.testing.assert_allclose(m.d_a @ m.b_mat.T, m.s_a, rtol=0, atol=1e-12 * scale)
    np.testing.assert_allclose(m.d_b @ m.b_mat.T, m.s_b, rtol=0, atol=1e-12 * scale)
