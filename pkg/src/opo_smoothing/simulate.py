"""Synthetic true-state trajectories and homodyne measurement records.

The true conditional mean follows the innovation-driven recursion

    d<x>_T = A <x>_T dt + K_A[V_T] dw_A + K_B[V_T] dw_B,

where ``K_m[V] = (V c_m^T + s_m^T) / r_m`` and the innovations ``dw_m``
are independent Wiener increments; the emitted records are

    y_m dt = c_m <x>_T dt + dw_m.

The integrator is Euler-Maruyama with the same ``y dt`` bookkeeping the
estimators use, so feeding the generated records back through the
two-channel filter reproduces the simulated means bit-exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._riccati import lyapunov_steady
from .model import ModelMatrices

__all__ = [
    "MeasurementRecord",
    "StateTrajectory",
    "simulate_true",
    "unconditional_cov",
    "default_dt",
    "default_burn_in",
    "record_rng",
]

#: simulator stability guard: reject dt * (fastest decay rate) above this
MAX_RATE_DT = 0.1


@dataclass
class MeasurementRecord:
    """Uniformly sampled homodyne currents for both channels.

    ``y_a[k]`` is the average current over ``[k dt, (k+1) dt)`` in the
    normalized continuous-measurement convention (``y dt ~ c x dt + dw``
    with unit-variance-rate noise).  ``burn_in`` counts initial samples
    flagged for exclusion from statistics.
    """

    dt: float
    y_a: np.ndarray
    y_b: np.ndarray
    seed: int | None = None
    burn_in: int = 0

    def __post_init__(self):
        self.y_a = np.asarray(self.y_a, dtype=float)
        self.y_b = np.asarray(self.y_b, dtype=float)
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.y_a.ndim != 1 or self.y_a.shape != self.y_b.shape:
            raise ValueError("y_a and y_b must be equal-length 1-D arrays")
        if len(self.y_a) < 1:
            raise ValueError("record must contain at least one sample")
        if not 0 <= self.burn_in <= len(self.y_a):
            raise ValueError("burn_in out of range")

    def __len__(self) -> int:
        return len(self.y_a)

    @property
    def duration(self) -> float:
        return len(self.y_a) * self.dt

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self.y_a)) * self.dt


@dataclass
class StateTrajectory:
    """Mean trajectory of one conditioning of the cavity state.

    ``cov`` is the steady-state 2x2 covariance (time-independent away
    from the record boundaries) or a per-sample (N, 2, 2) sequence.
    ``valid`` masks samples outside burn-in / boundary windows.
    """

    label: str
    times: np.ndarray
    means: np.ndarray
    cov: np.ndarray
    valid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.means = np.asarray(self.means, dtype=float)
        if self.means.shape != (len(self.times), 2):
            raise ValueError("means must have shape (len(times), 2)")
        self.cov = np.asarray(self.cov, dtype=float)
        if self.cov.shape not in ((2, 2), (len(self.times), 2, 2)):
            raise ValueError("cov must be (2, 2) or per-sample (N, 2, 2)")
        if self.valid is None:
            self.valid = np.ones(len(self.times), dtype=bool)
        else:
            self.valid = np.asarray(self.valid, dtype=bool)


def unconditional_cov(model: ModelMatrices) -> np.ndarray:
    """Steady-state covariance with no monitoring.

    Solves ``A V + V A^T + Q = 0``; for the diagonal OPO drift this is
    ``(hbar/2) diag(1/(1 - xi), 1/(1 + xi))``.  Raises ``ValueError``
    when the drift is not Hurwitz (at or above threshold).
    """
    v = lyapunov_steady(model.a_mat, model.q_mat)
    residual = model.a_mat @ v + v @ model.a_mat.T + model.q_mat
    if np.linalg.norm(residual) > 1e-12 * np.linalg.norm(model.q_mat):
        raise RuntimeError("Lyapunov solve left a large residual")
    return v


def _fastest_rate(model: ModelMatrices) -> float:
    return float(np.max(-np.linalg.eigvals(model.a_mat).real))


def default_dt(model: ModelMatrices, resolution: int = 200) -> float:
    """Time step resolving the fastest drift eigenvalue ``resolution``
    times over (default ``1 / (200 gamma (1 + xi))`` for the OPO)."""
    return 1.0 / (resolution * _fastest_rate(model))


def default_burn_in(model: ModelMatrices, dt: float, horizons: float = 10.0) -> int:
    """Number of samples covering ``horizons`` cavity lifetimes."""
    return int(math.ceil(horizons / (model.decay_rate() * dt)))


def record_rng(seed: int) -> np.random.Generator:
    """Counter-based generator for reproducible, splittable noise."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def gains(model: ModelMatrices, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Kalman gain columns ``K_m[V] = (V c_m^T + s_m^T) / r_m``."""
    k_a = (v @ model.c_a + model.s_a) / model.r_a
    k_b = (v @ model.c_b + model.s_b) / model.r_b
    return k_a, k_b


def _conditional_step(
    x: np.ndarray,
    a: np.ndarray,
    dt: float,
    terms: tuple[tuple[np.ndarray, np.ndarray, float], ...],
) -> np.ndarray:
    """One Euler step of an innovation-driven mean equation.

    ``terms`` holds ``(gain, c_row, y_sample)`` triples; the update is
    ``x + A x dt + sum_m K_m (y_m dt - c_m x dt)``.  The simulator and
    every estimator share this function so that identical inputs give
    bit-identical arithmetic.
    """
    out = x + dt * (a @ x)
    for k, c, y in terms:
        out = out + k * (y * dt - (c @ x) * dt)
    return out


def simulate_true(
    model: ModelMatrices,
    v_true: np.ndarray,
    duration: float,
    dt: float | None = None,
    seed: int = 0,
    *,
    burn_in: int | None = None,
    x0: np.ndarray | None = None,
) -> tuple[StateTrajectory, MeasurementRecord]:
    """Generate one true-mean trajectory and both measurement records.

    Parameters
    ----------
    model : ModelMatrices
        Constant system matrices.
    v_true : ndarray
        Steady-state true covariance (from the Riccati solver); only
        its gains enter the mean recursion.  Must be symmetric positive
        definite.
    duration : float
        Record length in seconds; the sample count is ``round(duration
        / dt)``.
    dt : float, optional
        Step size; defaults to :func:`default_dt`.  Rejected when
        ``dt * (fastest rate) > 0.1``.
    seed : int
        Key for the counter-based noise generator.
    burn_in : int, optional
        Samples flagged as transient; defaults to ten cavity lifetimes.
    x0 : ndarray, optional
        Initial mean, default zero.

    Returns
    -------
    (StateTrajectory, MeasurementRecord)
        Trajectory sampled at ``k dt`` (the mean *before* consuming
        ``y[k]``) and the emitted record.
    """
    v_true = np.asarray(v_true, dtype=float)
    if v_true.shape != (2, 2) or np.any(np.linalg.eigvalsh(0.5 * (v_true + v_true.T)) <= 0.0):
        raise ValueError("v_true must be a symmetric positive-definite 2x2 matrix")
    if dt is None:
        dt = default_dt(model)
    rate = _fastest_rate(model)
    if dt * rate > MAX_RATE_DT:
        raise ValueError(
            f"dt too coarse for the integrator: dt * rate = {dt * rate:.3g} > {MAX_RATE_DT}"
        )
    n_steps = int(round(duration / dt))
    if n_steps < 1:
        raise ValueError("duration shorter than one step")
    if burn_in is None:
        burn_in = min(default_burn_in(model, dt), n_steps)

    a = model.a_mat
    c_a, c_b = model.c_a, model.c_b
    k_a, k_b = gains(model, v_true)

    rng = record_rng(seed)
    dw = rng.standard_normal((n_steps, 2)) * math.sqrt(dt)

    x = np.zeros(2) if x0 is None else np.asarray(x0, dtype=float).copy()
    means = np.empty((n_steps, 2))
    y_a = np.empty(n_steps)
    y_b = np.empty(n_steps)
    for k in range(n_steps):
        means[k] = x
        ya = c_a @ x + dw[k, 0] / dt
        yb = c_b @ x + dw[k, 1] / dt
        y_a[k] = ya
        y_b[k] = yb
        x = _conditional_step(x, a, dt, ((k_a, c_a, ya), (k_b, c_b, yb)))

    times = np.arange(n_steps) * dt
    traj = StateTrajectory(
        label="true",
        times=times,
        means=means,
        cov=v_true,
        valid=times >= burn_in * dt,
    )
    record = MeasurementRecord(dt=dt, y_a=y_a, y_b=y_b, seed=seed, burn_in=burn_in)
    return traj, record
