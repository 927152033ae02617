"""Batch orchestration: single points, efficiency sweeps, angle grids.

Theory-only sweeps solve every cell's Riccati system in one vectorized
pass; Monte-Carlo sweeps evaluate cells sequentially with per-cell
noise streams derived by stable hashing of the cell coordinates, so
results are reproducible and independent of evaluation order (cells
are pure jobs and could equally run in a process pool).

Results serialize to a CSV table (one row per cell) plus a JSON
sidecar carrying provenance and, for angle grids, the optimal-theta_B
curves per recovery metric.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from ._riccati import RiccatiConvergenceError, lyapunov_steady, solve_riccati_steady
from .estimation import solve_riccati
from .metrics import MetricsReport, theory_report
from .model import SystemParams, build_model
from .montecarlo import EnsembleConfig, empirical_summary, run_ensemble
from .simulate import unconditional_cov

__all__ = [
    "SweepConfig",
    "SweepResult",
    "OptimalCurve",
    "run_point",
    "run_sweep",
    "true_state_squeezing_sweep",
    "cell_seed",
    "SCHEMA",
]

SCHEMA = "opo-smoothing/sweep v1"


def cell_seed(base_seed: int, *coords: float) -> int:
    """Stable 63-bit seed derived from the cell coordinates."""
    text = repr((int(base_seed),) + tuple(float(c) for c in coords))
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


@dataclass(frozen=True)
class SweepConfig:
    """One sweep: a base parameter point plus exactly one axis.

    ``transmittance_values`` sweeps the beam splitter (the eta_a axis
    of the efficiency figures); ``theta_a_deg``/``theta_b_deg`` define
    an angle grid (defaulting to 0..180 degrees in ``theta_step_deg``
    steps).  ``mode`` is ``"theory"`` or ``"monte-carlo"``.
    """

    params: SystemParams
    mode: str = "theory"
    transmittance_values: Sequence[float] | None = None
    theta_a_deg: Sequence[float] | None = None
    theta_b_deg: Sequence[float] | None = None
    theta_step_deg: float = 1.0
    records_per_point: int = 200
    duration: float = 50e-6
    dt: float | None = None
    seed: int = 0
    subsample: int | None = None

    def __post_init__(self):
        if self.mode not in ("theory", "monte-carlo"):
            raise ValueError(f"mode must be 'theory' or 'monte-carlo', got {self.mode!r}")
        if self.theta_step_deg <= 0.0:
            raise ValueError("theta_step_deg must be positive")
        for axis in (self.theta_a_deg, self.theta_b_deg):
            if axis is not None:
                arr = np.asarray(axis, dtype=float)
                if np.any(arr < 0.0) or np.any(arr > 180.0):
                    raise ValueError("angles must lie in [0, 180] degrees")

    def angle_axes(self) -> tuple[np.ndarray, np.ndarray]:
        default = np.arange(0.0, 180.0 + 1e-9, self.theta_step_deg)
        tha = np.asarray(self.theta_a_deg, dtype=float) if self.theta_a_deg is not None else default
        thb = np.asarray(self.theta_b_deg, dtype=float) if self.theta_b_deg is not None else default
        return tha, thb


@dataclass
class OptimalCurve:
    """Argmax of one recovery metric over theta_B for each theta_A.

    Ties are broken toward the smaller theta_B; rows where a tie
    occurred are listed in ``tie_rows``.
    """

    metric: str
    theta_a_deg: np.ndarray
    theta_b_opt_deg: np.ndarray
    value: np.ndarray
    tie_rows: list[int]


@dataclass
class SweepResult:
    """Per-cell metrics plus provenance and optimal curves."""

    kind: str
    columns: dict[str, np.ndarray]
    provenance: dict
    optimal: dict[str, OptimalCurve] = field(default_factory=dict)
    errors: list[str | None] | None = None

    @property
    def n_cells(self) -> int:
        return len(next(iter(self.columns.values())))

    def to_csv(self, path: str | Path) -> None:
        path = Path(path)
        names = list(self.columns)
        with path.open("w", newline="") as fh:
            fh.write(f"# schema={SCHEMA}\n")
            fh.write(f"# kind={self.kind}\n")
            writer = csv.writer(fh)
            writer.writerow(names)
            data = np.column_stack([np.asarray(self.columns[n], dtype=float) for n in names])
            for row in data:
                writer.writerow([f"{v:.17g}" for v in row])

    def to_json(self, path: str | Path) -> None:
        payload = {
            "schema": SCHEMA,
            "kind": self.kind,
            "provenance": self.provenance,
            "optimal": {
                name: {
                    "theta_a_deg": curve.theta_a_deg.tolist(),
                    "theta_b_opt_deg": curve.theta_b_opt_deg.tolist(),
                    "value": curve.value.tolist(),
                    "tie_rows": curve.tie_rows,
                }
                for name, curve in self.optimal.items()
            },
            "errors": self.errors,
        }
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")

    def save(self, basepath: str | Path) -> tuple[Path, Path]:
        """Write ``<base>.csv`` and ``<base>.json``; returns the paths."""
        base = Path(basepath)
        if base.suffix == ".csv":
            base = base.with_suffix("")
        csv_path = base.with_suffix(".csv")
        json_path = base.with_suffix(".json")
        self.to_csv(csv_path)
        self.to_json(json_path)
        return csv_path, json_path


# --- vectorized theory evaluation -------------------------------------------


def _grid_covariances(
    params: SystemParams,
    theta_a: np.ndarray,
    theta_b: np.ndarray,
    eta_a: np.ndarray,
    eta_b: np.ndarray,
    tol: float = 1e-12,
) -> dict[str, np.ndarray]:
    """Solve V_T, V_F, Lambda_R, V_S for a batch of cells.

    All axis arrays are flat with one entry per cell; the drift and
    process noise are shared.
    """
    gamma, xi, hbar = params.gamma, params.xi, params.hbar
    a = np.diag([-gamma * (1.0 - xi), -gamma * (1.0 + xi)])
    q = hbar * gamma * np.eye(2)
    u_a = np.stack([np.cos(theta_a), np.sin(theta_a)], axis=-1)
    u_b = np.stack([np.cos(theta_b), np.sin(theta_b)], axis=-1)
    c_a = np.sqrt(4.0 * gamma * eta_a / hbar)[:, None] * u_a
    c_b = np.sqrt(4.0 * gamma * eta_b / hbar)[:, None] * u_b
    s_a, s_b = -0.5 * hbar * c_a, -0.5 * hbar * c_b
    ones = np.ones(len(c_a))

    v_unc = lyapunov_steady(a, q)
    omega = float(np.linalg.norm(a, 2))
    nu = float(np.linalg.norm(v_unc))
    v0 = np.broadcast_to(v_unc, (len(c_a), 2, 2))

    v_t, res_t, _ = solve_riccati_steady(
        a, q, [(c_a, ones, s_a), (c_b, ones, s_b)], v0,
        rate_scale=omega, value_scale=nu, tol=tol,
    )
    v_f, res_f, _ = solve_riccati_steady(
        a, q, [(c_a, ones, s_a)], v0, rate_scale=omega, value_scale=nu, tol=tol
    )
    # gains with the unit measurement noise of the homodyne model
    k_a = np.einsum("nij,nj->ni", v_t, c_a) + s_a
    k_b = np.einsum("nij,nj->ni", v_t, c_b) + s_b
    a_bar = a - k_a[:, :, None] * c_a[:, None, :]
    q_lam = c_a[:, :, None] * c_a[:, None, :]
    nu_lam = np.maximum(np.sqrt(np.sum(q_lam**2, axis=(1, 2))) / (2.0 * omega), 1e-300)
    lam, res_l, _ = solve_riccati_steady(
        a_bar.swapaxes(1, 2), q_lam, [(k_b, ones, np.zeros_like(k_b))],
        np.zeros_like(v_t), rate_scale=omega, value_scale=nu_lam, tol=tol,
    )
    err = v_f - v_t
    w = np.eye(2) + lam @ err
    v_s = v_t + np.linalg.solve(w.swapaxes(1, 2), err.swapaxes(1, 2)).swapaxes(1, 2)
    v_s = 0.5 * (v_s + v_s.swapaxes(1, 2))
    return {
        "v_unc": v_unc,
        "v_true": v_t,
        "v_filt": v_f,
        "v_smooth": v_s,
        "lambda_retro": lam,
        "residual_v_true": res_t,
        "residual_v_filt": res_f,
        "residual_lambda": res_l,
    }


def _metric_columns(covs: dict[str, np.ndarray], hbar: float) -> dict[str, np.ndarray]:
    """Vectorized per-cell metrics from the stacked covariances."""
    out: dict[str, np.ndarray] = {}
    p_unc = 1.0 / np.sqrt(np.linalg.det(2.0 * covs["v_unc"] / hbar))
    eig_unc = np.linalg.eigvalsh(2.0 * covs["v_unc"] / hbar)
    n = len(covs["v_true"])
    out["purity_unc"] = np.full(n, p_unc)
    out["squeeze_unc"] = np.full(n, eig_unc[0])
    out["antisqueeze_unc"] = np.full(n, eig_unc[1])
    for tag, key in (("t", "v_true"), ("f", "v_filt"), ("s", "v_smooth")):
        v = covs[key]
        out[f"purity_{tag}"] = 1.0 / np.sqrt(np.linalg.det(2.0 * v / hbar))
        eig = np.linalg.eigvalsh(2.0 * v / hbar)
        out[f"squeeze_{tag}"] = eig[:, 0]
        out[f"antisqueeze_{tag}"] = eig[:, 1]
    for tag in ("unc", "t", "f", "s"):
        out[f"squeeze_db_{tag}"] = 10.0 * np.log10(out[f"squeeze_{tag}"])
        out[f"antisqueeze_db_{tag}"] = 10.0 * np.log10(out[f"antisqueeze_{tag}"])
    out["trsd_f"] = out["purity_t"] - out["purity_f"]
    out["trsd_s"] = out["purity_t"] - out["purity_s"]
    out["recovery_p"] = out["purity_s"] - out["purity_f"]
    out["recovery_d"] = out["trsd_f"] - out["trsd_s"]
    out["recovery_s"] = out["squeeze_f"] - out["squeeze_s"]
    out["recovery_a"] = out["antisqueeze_f"] - out["antisqueeze_s"]
    return out


def _theory_columns(
    params: SystemParams,
    theta_a: np.ndarray,
    theta_b: np.ndarray,
    eta_a: np.ndarray,
    eta_b: np.ndarray,
    transmittance: np.ndarray,
) -> dict[str, np.ndarray]:
    covs = _grid_covariances(params, theta_a, theta_b, eta_a, eta_b)
    cols: dict[str, np.ndarray] = {
        "theta_a_deg": np.degrees(theta_a),
        "theta_b_deg": np.degrees(theta_b),
        "transmittance": transmittance,
        "eta_a": eta_a,
        "eta_b": eta_b,
        "xi": np.full(len(eta_a), params.xi),
        "gamma": np.full(len(eta_a), params.gamma),
        "hbar": np.full(len(eta_a), params.hbar),
    }
    cols.update(_metric_columns(covs, params.hbar))
    for el, (i, j) in (("xx", (0, 0)), ("xp", (0, 1)), ("pp", (1, 1))):
        cols[f"v_unc_{el}"] = np.full(len(eta_a), covs["v_unc"][i, j])
        for tag, key in (("t", "v_true"), ("f", "v_filt"), ("s", "v_smooth")):
            cols[f"v_{tag}_{el}"] = covs[key][:, i, j]
    cols["residual_v_true"] = covs["residual_v_true"]
    cols["residual_v_filt"] = covs["residual_v_filt"]
    cols["residual_lambda"] = covs["residual_lambda"]
    return cols


_RECOVERY_METRICS = ("recovery_p", "recovery_d", "recovery_s", "recovery_a")


def _optimal_curves(
    cols: dict[str, np.ndarray], n_a: int, n_b: int, theta_b_axis: np.ndarray
) -> dict[str, OptimalCurve]:
    theta_a_axis = cols["theta_a_deg"].reshape(n_a, n_b)[:, 0]
    curves = {}
    for metric in _RECOVERY_METRICS:
        grid = cols[metric].reshape(n_a, n_b)
        idx = np.argmax(grid, axis=1)  # first max: smallest theta_B on ties
        best = grid[np.arange(n_a), idx]
        ties = [int(i) for i in range(n_a) if np.count_nonzero(grid[i] == best[i]) > 1]
        curves[metric] = OptimalCurve(
            metric=metric,
            theta_a_deg=theta_a_axis.copy(),
            theta_b_opt_deg=theta_b_axis[idx].copy(),
            value=best,
            tie_rows=ties,
        )
    return curves


def _provenance(config: SweepConfig, kind: str, wall: float, n_cells: int) -> dict:
    prov = {
        "version": __version__,
        "kind": kind,
        "mode": config.mode,
        "seed": config.seed,
        "n_cells": n_cells,
        "wall_time_s": wall,
    }
    if config.mode == "monte-carlo":
        prov.update(
            records_per_point=config.records_per_point,
            duration=config.duration,
            dt=config.dt,
            subsample=config.subsample,
        )
    return prov


def run_point(config: SweepConfig) -> MetricsReport:
    """Evaluate a single parameter point (theory, plus Monte-Carlo
    empirical entries when ``mode == 'monte-carlo'``)."""
    params = config.params
    model = build_model(params)
    sol = solve_riccati(model)
    v_unc = unconditional_cov(model)
    report = theory_report(sol, v_unc, params)
    if config.mode == "monte-carlo":
        ens_cfg = EnsembleConfig(
            n_records=config.records_per_point,
            duration=config.duration,
            dt=config.dt,
            seed=cell_seed(config.seed, params.theta_a, params.theta_b, *params.efficiencies()),
            subsample=config.subsample,
        )
        ens = run_ensemble(model, sol, ens_cfg)
        report.empirical, report.mc_stderr = empirical_summary(model, sol, v_unc, ens)
    return report


def _cells_for_config(config: SweepConfig) -> tuple[str, list[SystemParams], dict]:
    """Expand the configured axis into per-cell parameter sets."""
    if config.transmittance_values is not None:
        if config.theta_a_deg is not None or config.theta_b_deg is not None:
            raise ValueError("configure either a transmittance axis or an angle grid, not both")
        t_values = [float(t) for t in config.transmittance_values]
        cells = [config.params.with_transmittance(t) for t in t_values]
        return "eta", cells, {"transmittance": np.asarray(t_values)}
    tha, thb = config.angle_axes()
    deg_a, deg_b = np.meshgrid(tha, thb, indexing="ij")
    cells = [
        config.params.with_angles(math.radians(a), math.radians(b))
        for a, b in zip(deg_a.ravel(), deg_b.ravel())
    ]
    extra = {
        "n_a": len(tha),
        "n_b": len(thb),
        "theta_b_axis": thb,
        "theta_a_deg": deg_a.ravel(),
        "theta_b_deg": deg_b.ravel(),
    }
    return "angles", cells, extra


def _theory_sweep_columns(
    config: SweepConfig, kind: str, cells: list[SystemParams], extra: dict
) -> dict[str, np.ndarray]:
    theta_a = np.array([c.theta_a for c in cells])
    theta_b = np.array([c.theta_b for c in cells])
    eta = np.array([c.efficiencies() for c in cells])
    if config.params.eta_a_override is None and kind == "eta":
        transmittance = np.array([c.transmittance for c in cells])
    elif config.params.eta_a_override is None:
        transmittance = np.full(len(cells), config.params.transmittance)
    else:
        transmittance = np.full(len(cells), np.nan)
    cols = _theory_columns(config.params, theta_a, theta_b, eta[:, 0], eta[:, 1], transmittance)
    # carry the exact degree grid rather than a radians round-trip
    for key in ("theta_a_deg", "theta_b_deg"):
        if key in extra:
            cols[key] = extra[key]
    return cols


def run_sweep(config: SweepConfig) -> SweepResult:
    """Evaluate every cell of the configured axis.

    Cell values are independent of evaluation order; Monte-Carlo cells
    get noise streams keyed by the cell coordinates, so any subset of
    cells reproduces identically.  Failures are recorded per cell (as
    NaN rows plus an error message) without aborting the sweep.
    """
    start = time.perf_counter()
    kind, cells, extra = _cells_for_config(config)
    cols = _theory_sweep_columns(config, kind, cells, extra)
    errors: list[str | None] = [None] * len(cells)

    if config.mode == "monte-carlo":
        mc_cols: dict[str, np.ndarray] = {}
        for i, cell in enumerate(cells):
            try:
                report = run_point(replace(config, params=cell))
            except Exception as exc:  # record and continue
                errors[i] = f"{type(exc).__name__}: {exc}"
                continue
            for key, value in report.empirical.items():
                mc_cols.setdefault(f"mc_{key}", np.full(len(cells), np.nan))[i] = value
            for key, value in report.mc_stderr.items():
                mc_cols.setdefault(f"mc_stderr_{key}", np.full(len(cells), np.nan))[i] = value
        cols.update(mc_cols)

    optimal = {}
    if kind == "angles":
        optimal = _optimal_curves(cols, extra["n_a"], extra["n_b"], extra["theta_b_axis"])
    wall = time.perf_counter() - start
    return SweepResult(
        kind=kind,
        columns=cols,
        provenance=_provenance(config, kind, wall, len(cells)),
        optimal=optimal,
        errors=errors if any(errors) else None,
    )


_TRUE_COLUMNS = (
    "theta_a_deg",
    "theta_b_deg",
    "transmittance",
    "eta_a",
    "eta_b",
    "xi",
    "gamma",
    "hbar",
    "purity_t",
    "squeeze_t",
    "antisqueeze_t",
    "squeeze_db_t",
    "antisqueeze_db_t",
    "squeeze_unc",
    "antisqueeze_unc",
    "residual_v_true",
)


def true_state_squeezing_sweep(config: SweepConfig) -> SweepResult:
    """Angle grid restricted to the true-state squeezing metrics."""
    start = time.perf_counter()
    kind, cells, extra = _cells_for_config(config)
    if kind != "angles":
        raise ValueError("true-state squeezing sweeps run on angle grids")
    cols = _theory_sweep_columns(config, kind, cells, extra)
    cols = {k: cols[k] for k in _TRUE_COLUMNS}
    wall = time.perf_counter() - start
    return SweepResult(
        kind="true-squeeze",
        columns=cols,
        provenance=_provenance(config, "true-squeeze", wall, len(cells)),
    )
