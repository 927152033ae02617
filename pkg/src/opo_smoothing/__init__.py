"""Linear-Gaussian estimation toolkit for a continuously monitored OPO.

Simulates homodyne measurement records of a below-threshold optical
parametric oscillator split between an observed channel (Alice) and a
hidden one (Bob), runs the matching Kalman-style filter, retrofilter
and smoother, and computes purity / deviation / squeezing metrics and
measurement-setting sweeps.
"""

__version__ = "0.1.0"

from .model import (
    ModelMatrices,
    SystemParams,
    build_model,
    efficiencies,
    load_params,
    paper_defaults,
    save_params,
    transmittance_for_eta_a,
)
from .simulate import (
    MeasurementRecord,
    StateTrajectory,
    default_dt,
    simulate_true,
    unconditional_cov,
)
from .estimation import (
    RetroTrajectory,
    RiccatiSolution,
    SmootherOutput,
    estimate_record,
    run_filter,
    run_retrofilter,
    run_true_filter,
    smooth,
    solve_riccati,
)
from .metrics import (
    ConditionalMetrics,
    MetricsReport,
    Recoveries,
    conditional_metrics,
    purity,
    recoveries,
    squeezing,
    theory_report,
    trsd_empirical,
    trsd_theory,
)
from .montecarlo import EnsembleConfig, EnsembleMeans, empirical_summary, run_ensemble
from .recordio import load_record, save_record, save_trajectories
from .sweep import (
    SweepConfig,
    SweepResult,
    run_point,
    run_sweep,
    true_state_squeezing_sweep,
)

__all__ = [
    "__version__",
    "SystemParams",
    "ModelMatrices",
    "build_model",
    "efficiencies",
    "paper_defaults",
    "transmittance_for_eta_a",
    "load_params",
    "save_params",
    "MeasurementRecord",
    "StateTrajectory",
    "simulate_true",
    "unconditional_cov",
    "default_dt",
    "RiccatiSolution",
    "RetroTrajectory",
    "SmootherOutput",
    "solve_riccati",
    "run_filter",
    "run_true_filter",
    "run_retrofilter",
    "smooth",
    "estimate_record",
    "purity",
    "squeezing",
    "trsd_theory",
    "trsd_empirical",
    "conditional_metrics",
    "recoveries",
    "ConditionalMetrics",
    "Recoveries",
    "MetricsReport",
    "theory_report",
    "EnsembleConfig",
    "EnsembleMeans",
    "run_ensemble",
    "empirical_summary",
    "load_record",
    "save_record",
    "save_trajectories",
    "SweepConfig",
    "SweepResult",
    "run_point",
    "run_sweep",
    "true_state_squeezing_sweep",
]
