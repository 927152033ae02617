"""Shared fixtures: the paper operating points and session-scoped
Monte-Carlo ensembles reused by the unit and acceptance tests."""

from __future__ import annotations

import numpy as np
import pytest

import opo_smoothing as om
from opo_smoothing import montecarlo as mc


@pytest.fixture(scope="session")
def paper_043():
    params = om.paper_defaults(transmittance=om.transmittance_for_eta_a(0.43))
    model = om.build_model(params)
    sol = om.solve_riccati(model)
    v_unc = om.unconditional_cov(model)
    return params, model, sol, v_unc


def _ensemble_cell(eta_a: float, n_records: int, seed: int = 11):
    params = om.paper_defaults(transmittance=om.transmittance_for_eta_a(eta_a))
    model = om.build_model(params)
    sol = om.solve_riccati(model)
    v_unc = om.unconditional_cov(model)
    ens = mc.run_ensemble(
        model,
        sol,
        mc.EnsembleConfig(n_records=n_records, duration=50e-6, seed=seed),
    )
    return params, model, sol, v_unc, ens


@pytest.fixture(scope="session")
def ensemble_043():
    """200 records x 50 us at eta_A = 0.43 (the pinned MC cell)."""
    return _ensemble_cell(0.43, 200)


@pytest.fixture(scope="session")
def ensemble_009():
    return _ensemble_cell(0.09, 100)


@pytest.fixture(scope="session")
def ensemble_078():
    return _ensemble_cell(0.78, 100)


@pytest.fixture(scope="session")
def angle_grid_043():
    """Theory grid over (theta_A, theta_B) in 1-degree steps at eta_A=0.43."""
    params = om.paper_defaults(transmittance=om.transmittance_for_eta_a(0.43))
    config = om.SweepConfig(params=params, theta_step_deg=1.0)
    return om.run_sweep(config)


def rel_err(value: np.ndarray, target: np.ndarray, scale: float | None = None) -> float:
    value = np.asarray(value, dtype=float)
    target = np.asarray(target, dtype=float)
    denom = np.max(np.abs(target)) if scale is None else scale
    return float(np.max(np.abs(value - target)) / denom)
