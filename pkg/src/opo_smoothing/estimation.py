"""Filtering, retrofiltering and smoothing over measurement records.

Steady-state covariances come from the matching algebraic Riccati
equations:

    0 = A V_T + V_T A^T + Q - K_A[V_T] r_A K_A[V_T]^T - K_B[V_T] r_B K_B[V_T]^T
    0 = A V_F + V_F A^T + Q - K_A[V_F] r_A K_A[V_F]^T
    0 = L Abar + Abar^T L - L Qbar L + c_A^T r_A^{-1} c_A

with ``K_m[V] = (V c_m^T + s_m^T) / r_m``, ``Abar = A - K_A[V_T] c_A``
and ``Qbar = K_B[V_T] r_B K_B[V_T]^T``, and the smoothed covariance is
assembled as ``V_S = V_T + (V_F - V_T) [I + L (V_F - V_T)]^{-1}``.

The mean estimators integrate the conditional equations over a record
with the steady-state gains; the retrofilter runs backward from the
final conditions ``z(t_f) = 0``, ``L(t_f) = 0`` in the numerically
stable information-form variables, and the smoother combines the two
passes pointwise through the singularity-avoiding formula

    <x>_S = [I + (V_F - V_T) L]^{-1} (<x>_F + (V_F - V_T) z).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._riccati import lyapunov_steady, riccati_rhs, solve_riccati_steady
from .model import ModelMatrices
from .simulate import MeasurementRecord, StateTrajectory, _conditional_step, gains

__all__ = [
    "RiccatiResiduals",
    "RiccatiSolution",
    "RetroTrajectory",
    "SmootherOutput",
    "solve_riccati",
    "run_filter",
    "run_true_filter",
    "run_retrofilter",
    "smooth",
    "estimate_record",
    "boundary_margin",
]

#: width of the start/end exclusion windows, in cavity lifetimes
BOUNDARY_LIFETIMES = 20.0

#: scaled residual ceiling the solver must beat (relative to the
#: equation's constant term)
RESIDUAL_CEILING = 1e-10


@dataclass(frozen=True)
class RiccatiResiduals:
    """Algebraic residual norms, scaled by each equation's constant
    term (``|Q|`` for the covariances, ``|c_A^T r_A^{-1} c_A|`` for the
    retrofilter information matrix)."""

    v_true: float
    v_filt: float
    lambda_retro: float


@dataclass(frozen=True)
class RiccatiSolution:
    """Steady-state second moments of every conditioning, plus the
    derived gains used by the mean recursions."""

    v_true: np.ndarray
    v_filt: np.ndarray
    v_smooth: np.ndarray
    lambda_retro: np.ndarray
    residuals: RiccatiResiduals
    k_true_a: np.ndarray
    k_true_b: np.ndarray
    k_filt_a: np.ndarray
    a_bar: np.ndarray
    q_bar: np.ndarray
    hbar: float

    @property
    def error_filt(self) -> np.ndarray:
        """Filtered estimation-error matrix ``V_F - V_T``."""
        return self.v_filt - self.v_true


@dataclass
class RetroTrajectory:
    """Backward-pass information-form series.

    ``z[k]`` and ``lam[k]`` condition on the record samples
    ``y[k:]``; the arrays carry one extra final point at ``t_f`` where
    both are exactly zero.  ``converged`` marks samples whose ``lam``
    has reached the steady-state ``lambda_ss`` (within ``1e-6``
    relative), and ``convergence_window`` is the distance from ``t_f``
    beyond which that holds.
    """

    times: np.ndarray
    z: np.ndarray
    lam: np.ndarray
    lambda_ss: np.ndarray
    converged: np.ndarray
    convergence_window: float


@dataclass
class SmootherOutput:
    """Bundle of every conditioning computed from one record."""

    filtered: StateTrajectory
    retro: RetroTrajectory
    smoothed: StateTrajectory
    true_ref: StateTrajectory | None = None


def boundary_margin(model: ModelMatrices) -> float:
    """Default start/end exclusion window (seconds)."""
    return BOUNDARY_LIFETIMES / model.decay_rate()


def _is_vacuum_form(model: ModelMatrices) -> bool:
    """True when the cross-covariances carry the quantum vacuum floor
    ``S_m = -(hbar/2) c_m`` (the Heisenberg checks only apply then)."""
    return bool(
        np.allclose(model.s_a, -0.5 * model.hbar * model.c_a, rtol=1e-9, atol=0.0)
        and np.allclose(model.s_b, -0.5 * model.hbar * model.c_b, rtol=1e-9, atol=0.0)
    )


def _check_symmetry(name: str, v: np.ndarray) -> np.ndarray:
    scale = max(float(np.max(np.abs(v))), 1e-300)
    skew = float(np.max(np.abs(v - v.T)))
    if skew > 1e-8 * scale:
        warnings.warn(
            f"{name} lost symmetry (relative skew {skew / scale:.2e}); re-symmetrizing",
            RuntimeWarning,
            stacklevel=3,
        )
    return 0.5 * (v + v.T)


def solve_riccati(
    model: ModelMatrices,
    channels: str = "both",
    *,
    tol: float = 1e-12,
) -> RiccatiSolution:
    """Solve the steady-state Riccati system for one parameter point.

    ``channels`` selects what the true state is conditioned on:
    ``"both"`` (Bob's record exists but is hidden from the estimators)
    or ``"alice"`` (no hidden channel; smoothing then degenerates to
    filtering).  Raises :class:`RiccatiConvergenceError` when the
    damped integration cannot reach ``tol`` and ``ValueError`` for a
    non-Hurwitz drift.
    """
    if channels not in ("both", "alice"):
        raise ValueError(f"channels must be 'both' or 'alice', got {channels!r}")
    a, q = model.a_mat, model.q_mat
    chan_a = (model.c_a, np.asarray(model.r_a), model.s_a)
    chan_b = (model.c_b, np.asarray(model.r_b), model.s_b)
    true_channels = [chan_a, chan_b] if channels == "both" else [chan_a]

    v_unc = lyapunov_steady(a, q)
    omega = float(np.linalg.norm(a, 2))
    nu = float(np.linalg.norm(v_unc))

    v_true, _, _ = solve_riccati_steady(
        a, q, true_channels, v_unc, rate_scale=omega, value_scale=nu, tol=tol
    )
    v_filt, _, _ = solve_riccati_steady(
        a, q, [chan_a], v_unc, rate_scale=omega, value_scale=nu, tol=tol
    )
    v_true = _check_symmetry("V_T", v_true)
    v_filt = _check_symmetry("V_F", v_filt)

    k_true_a, k_true_b = gains(model, v_true)
    if channels == "alice":
        k_true_b = np.zeros(2)
    k_filt_a, _ = gains(model, v_filt)
    a_bar = a - np.outer(k_true_a, model.c_a)
    q_bar = np.outer(k_true_b, k_true_b) * model.r_b

    # The backward information equation is the filter Riccati under
    # a -> a_bar^T, q -> c_A^T r_A^{-1} c_A, with the quadratic term
    # produced by a pseudo-channel built from the hidden gain.
    q_lam = np.outer(model.c_a, model.c_a) / model.r_a
    pseudo = (
        k_true_b * math.sqrt(model.r_b),
        np.asarray(1.0),
        np.zeros(2),
    )
    omega_bar = max(float(np.linalg.norm(a_bar, 2)), omega)
    nu_lam = max(float(np.linalg.norm(q_lam)) / (2.0 * omega_bar), 1e-300)
    lam, _, _ = solve_riccati_steady(
        a_bar.T,
        q_lam,
        [pseudo],
        np.zeros((2, 2)),
        rate_scale=omega_bar,
        value_scale=nu_lam,
        tol=tol,
    )
    lam = _check_symmetry("Lambda_R", lam)

    err = v_filt - v_true
    v_smooth = v_true + np.linalg.solve((np.eye(2) + lam @ err).T, err.T).T
    v_smooth = _check_symmetry("V_S", v_smooth)

    residuals = RiccatiResiduals(
        v_true=_scaled_residual(v_true, a, q, true_channels, np.linalg.norm(q)),
        v_filt=_scaled_residual(v_filt, a, q, [chan_a], np.linalg.norm(q)),
        lambda_retro=_scaled_residual(
            lam, a_bar.T, q_lam, [pseudo], max(np.linalg.norm(q_lam), 1e-300)
        ),
    )
    sol = RiccatiSolution(
        v_true=v_true,
        v_filt=v_filt,
        v_smooth=v_smooth,
        lambda_retro=lam,
        residuals=residuals,
        k_true_a=k_true_a,
        k_true_b=k_true_b,
        k_filt_a=k_filt_a,
        a_bar=a_bar,
        q_bar=q_bar,
        hbar=model.hbar,
    )
    _validate_solution(sol, model)
    return sol


def _scaled_residual(v, a, q, channels, ref) -> float:
    return float(np.linalg.norm(riccati_rhs(v, a, q, channels)) / ref)


def _validate_solution(sol: RiccatiSolution, model: ModelMatrices) -> None:
    res = sol.residuals
    worst = max(res.v_true, res.v_filt, res.lambda_retro)
    if worst > RESIDUAL_CEILING:
        raise RuntimeError(f"Riccati residual {worst:.2e} above {RESIDUAL_CEILING:.0e}")
    if np.any(np.linalg.eigvalsh(sol.lambda_retro) < -1e-9 * max(1.0, np.linalg.norm(sol.lambda_retro))):
        raise RuntimeError("retrofilter information matrix is not PSD")
    det_t = float(np.linalg.det(sol.v_true))
    det_s = float(np.linalg.det(sol.v_smooth))
    det_f = float(np.linalg.det(sol.v_filt))
    slack = 1e-9
    if not (det_t <= det_s * (1.0 + slack) and det_s <= det_f * (1.0 + slack)):
        raise RuntimeError(
            f"purity ordering violated: det V_T={det_t}, det V_S={det_s}, det V_F={det_f}"
        )
    if _is_vacuum_form(model):
        floor = (2.0 / model.hbar) ** 2
        for name, v in (("V_T", sol.v_true), ("V_S", sol.v_smooth), ("V_F", sol.v_filt)):
            if float(np.linalg.det(v)) * floor < 1.0 - 1e-9:
                raise RuntimeError(f"{name} violates the Heisenberg bound")


def _start_valid(model: ModelMatrices, record: MeasurementRecord, times: np.ndarray) -> np.ndarray:
    margin = max(record.burn_in * record.dt, boundary_margin(model))
    return times >= margin


def _run_conditional(
    model: ModelMatrices,
    record: MeasurementRecord,
    terms_spec: tuple[tuple[np.ndarray, np.ndarray, np.ndarray], ...],
    n_steps: int | None,
) -> np.ndarray:
    """Forward Euler pass shared by the filter and the true filter.

    ``terms_spec`` holds ``(gain, c_row, samples)`` per channel;
    ``means[k]`` is the estimate before consuming sample ``k``.
    """
    if n_steps is None:
        n_steps = len(record)
    if n_steps > len(record):
        raise ValueError(
            f"requested horizon of {n_steps} samples, record has {len(record)}"
        )
    a, dt = model.a_mat, record.dt
    x = np.zeros(2)
    means = np.empty((n_steps, 2))
    for k in range(n_steps):
        means[k] = x
        x = _conditional_step(
            x, a, dt, tuple((g, c, y[k]) for g, c, y in terms_spec)
        )
    return means


def run_filter(
    model: ModelMatrices,
    record: MeasurementRecord,
    sol: RiccatiSolution,
    n_steps: int | None = None,
) -> StateTrajectory:
    """Causal estimate conditioned on Alice's past record only."""
    means = _run_conditional(
        model, record, ((sol.k_filt_a, model.c_a, record.y_a),), n_steps
    )
    times = np.arange(len(means)) * record.dt
    return StateTrajectory(
        label="filtered",
        times=times,
        means=means,
        cov=sol.v_filt,
        valid=_start_valid(model, record, times),
    )


def run_true_filter(
    model: ModelMatrices,
    record: MeasurementRecord,
    sol: RiccatiSolution,
    n_steps: int | None = None,
) -> StateTrajectory:
    """Reference estimate conditioned on both records (the true state).

    Runs the same recursion the simulator used, so replaying a
    simulated record reproduces the simulated means bit-exactly.
    """
    means = _run_conditional(
        model,
        record,
        (
            (sol.k_true_a, model.c_a, record.y_a),
            (sol.k_true_b, model.c_b, record.y_b),
        ),
        n_steps,
    )
    times = np.arange(len(means)) * record.dt
    return StateTrajectory(
        label="true",
        times=times,
        means=means,
        cov=sol.v_true,
        valid=_start_valid(model, record, times),
    )


def retro_step_matrices(
    model: ModelMatrices, sol: RiccatiSolution, lam_next: np.ndarray, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Backward Euler increments for ``z`` given ``lam`` at the later
    time: ``z_k = z_{k+1} + M z_{k+1} + m y_k`` (batched over leading
    axes of ``lam_next``)."""
    drift = sol.a_bar.swapaxes(-1, -2) - lam_next @ sol.q_bar
    forcing = model.c_a / model.r_a - lam_next @ sol.k_true_a
    return dt * drift, dt * forcing


def run_retrofilter(
    model: ModelMatrices,
    record: MeasurementRecord,
    sol: RiccatiSolution,
) -> RetroTrajectory:
    """Anti-causal information-form pass over the full record.

    Integrates backward from ``z(t_f) = 0``, ``lam(t_f) = 0``; away
    from ``t_f`` the information matrix converges to the steady-state
    ``lambda_retro`` and the reported ``convergence_window`` covers the
    samples where it has not.
    """
    n = len(record)
    dt = record.dt
    a_bar_t = sol.a_bar.T
    q_bar = sol.q_bar
    c_over_r = model.c_a / model.r_a
    k_a = sol.k_true_a
    q_lam = np.outer(model.c_a, model.c_a) / model.r_a

    z = np.zeros((n + 1, 2))
    lam = np.zeros((n + 1, 2, 2))
    y_a = record.y_a
    for k in range(n - 1, -1, -1):
        lam_next = lam[k + 1]
        z_next = z[k + 1]
        z[k] = z_next + dt * (
            (a_bar_t - lam_next @ q_bar) @ z_next
            + (c_over_r - lam_next @ k_a) * y_a[k]
        )
        step = lam_next @ sol.a_bar + a_bar_t @ lam_next - lam_next @ q_bar @ lam_next + q_lam
        lam_k = lam_next + dt * step
        lam[k] = 0.5 * (lam_k + lam_k.T)

    lam_ss = sol.lambda_retro
    scale = max(float(np.linalg.norm(lam_ss)), 1e-300)
    converged = np.linalg.norm(lam - lam_ss, axis=(1, 2)) <= 1e-6 * scale
    times = np.arange(n + 1) * dt
    not_conv = np.nonzero(~converged)[0]
    window = float(times[-1] - times[not_conv[0]]) if len(not_conv) else 0.0
    return RetroTrajectory(
        times=times,
        z=z,
        lam=lam,
        lambda_ss=lam_ss,
        converged=converged,
        convergence_window=window,
    )


def smooth(
    filtered: StateTrajectory,
    retro: RetroTrajectory,
    sol: RiccatiSolution,
) -> StateTrajectory:
    """Combine the forward and backward passes pointwise.

    Uses the singularity-avoiding form throughout; the steady-state
    smoothed covariance is attached and samples where the backward pass
    has not converged (or inside the filtered burn-in window) are
    flagged invalid.
    """
    n = len(filtered.times)
    step = retro.times[1] - retro.times[0] if len(retro.times) > 1 else 1.0
    if len(retro.times) < n or np.max(np.abs(retro.times[:n] - filtered.times)) > 1e-6 * step:
        raise ValueError("filtered and retrofiltered series do not share timestamps")
    err = sol.error_filt
    w = np.eye(2) + err @ retro.lam[:n]
    dets = np.linalg.det(w)
    if np.any(np.abs(dets) < 1e-12):
        cond = float(np.max(np.linalg.cond(w)))
        raise RuntimeError(
            f"smoother combination matrix is numerically singular (cond {cond:.2e}); "
            "this cannot happen for physical covariances"
        )
    rhs = filtered.means + retro.z[:n] @ err.T
    means = np.linalg.solve(w, rhs[..., None])[..., 0]
    valid = filtered.valid & retro.converged[:n]
    return StateTrajectory(
        label="smoothed",
        times=filtered.times,
        means=means,
        cov=sol.v_smooth,
        valid=valid,
    )


def estimate_record(
    model: ModelMatrices,
    record: MeasurementRecord,
    sol: RiccatiSolution | None = None,
    *,
    include_true: bool = True,
) -> SmootherOutput:
    """Run every conditioning over one record."""
    if sol is None:
        sol = solve_riccati(model)
    filtered = run_filter(model, record, sol)
    retro = run_retrofilter(model, record, sol)
    smoothed = smooth(filtered, retro, sol)
    true_ref = run_true_filter(model, record, sol) if include_true else None
    return SmootherOutput(
        filtered=filtered, retro=retro, smoothed=smoothed, true_ref=true_ref
    )
