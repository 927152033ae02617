"""Batched Monte-Carlo ensembles of records and their estimates.

Runs many independent records through the simulator, filter,
retrofilter and smoother with the recursions vectorized across
records, keeping memory bounded by processing records in batches and
storing means only at subsampled statistics instants (the backward
pass still consumes the observed record at full rate).

Each record draws its noise from its own counter-based stream keyed by
``(seed, record_index)``, so results are reproducible bit-for-bit and
independent of the batch split.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimation import RiccatiSolution, boundary_margin
from .metrics import (
    mean_square_error,
    purity,
    reconstruct_covariance,
    reconstruct_true_cov,
    sample_cov_means,
    squeezing,
    trsd_empirical,
)
from .model import ModelMatrices
from .simulate import default_burn_in, default_dt

__all__ = ["EnsembleConfig", "EnsembleMeans", "run_ensemble", "empirical_summary"]

_CHUNK = 32768  # steps of pre-generated noise per slab


@dataclass(frozen=True)
class EnsembleConfig:
    """Monte-Carlo run shape (desk-scale defaults: 200 x 50 us)."""

    n_records: int = 200
    duration: float = 50e-6
    dt: float | None = None
    seed: int = 0
    records_per_batch: int = 50
    subsample: int | None = None

    def __post_init__(self):
        if self.n_records < 1 or self.records_per_batch < 1:
            raise ValueError("record counts must be positive")
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")


@dataclass
class EnsembleMeans:
    """Subsampled mean series of every conditioning.

    Arrays are shaped ``(records, samples, 2)``; ``valid`` masks the
    instants outside the burn-in and smoother-boundary windows.
    """

    times: np.ndarray
    x_true: np.ndarray
    x_filt: np.ndarray
    x_smooth: np.ndarray
    valid: np.ndarray
    dt: float
    seed: int


def _record_streams(seed: int, indices: range) -> list[np.random.Generator]:
    return [
        np.random.Generator(np.random.Philox(key=np.array([seed, r], dtype=np.uint64)))
        for r in indices
    ]


def _lambda_series(
    model: ModelMatrices, sol: RiccatiSolution, dt: float, n_steps: int
) -> np.ndarray:
    """Backward information matrix at every step, final condition zero."""
    a_bar = sol.a_bar
    a_bar_t = a_bar.T
    q_bar = sol.q_bar
    q_lam = np.outer(model.c_a, model.c_a) / model.r_a
    lam = np.zeros((n_steps + 1, 2, 2))
    for k in range(n_steps - 1, -1, -1):
        ln = lam[k + 1]
        step = ln @ a_bar + a_bar_t @ ln - ln @ q_bar @ ln + q_lam
        nxt = ln + dt * step
        lam[k] = 0.5 * (nxt + nxt.T)
    return lam


def run_ensemble(
    model: ModelMatrices,
    sol: RiccatiSolution,
    config: EnsembleConfig,
) -> EnsembleMeans:
    """Simulate and estimate ``config.n_records`` independent records."""
    dt = config.dt if config.dt is not None else default_dt(model)
    n_steps = int(round(config.duration / dt))
    if n_steps < 2:
        raise ValueError("duration shorter than two steps")
    stride = config.subsample
    if stride is None:
        stride = max(1, int(round(0.5 / (model.decay_rate() * dt))))
    sub_idx = np.arange(0, n_steps, stride)
    times = sub_idx * dt

    a = model.a_mat
    c_a, c_b = model.c_a, model.c_b
    k_ta, k_tb, k_fa = sol.k_true_a, sol.k_true_b, sol.k_filt_a
    m_true_t = (np.eye(2) + dt * a).T
    m_filt_t = (np.eye(2) + dt * (a - np.outer(k_fa, c_a))).T
    err = sol.error_filt

    lam = _lambda_series(model, sol, dt, n_steps)
    # z-step coefficients: z_k = z_{k+1} + z_{k+1} @ m1[k].T + y[k] * m2[k]
    m1 = dt * (sol.a_bar.T[None] - lam[1:] @ sol.q_bar)
    m2 = dt * (c_a / model.r_a - lam[1:] @ k_ta)
    w_sub = np.eye(2) + err @ lam[sub_idx]

    sqrt_dt = math.sqrt(dt)
    n_sub = len(sub_idx)
    x_true = np.empty((config.n_records, n_sub, 2))
    x_filt = np.empty((config.n_records, n_sub, 2))
    x_smooth = np.empty((config.n_records, n_sub, 2))

    for start in range(0, config.n_records, config.records_per_batch):
        batch = range(start, min(start + config.records_per_batch, config.n_records))
        streams = _record_streams(config.seed, batch)
        nb = len(streams)
        xt = np.zeros((nb, 2))
        xf = np.zeros((nb, 2))
        y_a = np.empty((nb, n_steps))
        sub_pos = 0
        for chunk_start in range(0, n_steps, _CHUNK):
            chunk = min(_CHUNK, n_steps - chunk_start)
            noise = np.empty((nb, chunk, 2))
            for i, g in enumerate(streams):
                noise[i] = g.standard_normal((chunk, 2))
            noise *= sqrt_dt
            for j in range(chunk):
                k = chunk_start + j
                if sub_pos < n_sub and k == sub_idx[sub_pos]:
                    x_true[batch, sub_pos] = xt
                    x_filt[batch, sub_pos] = xf
                    sub_pos += 1
                dwa = noise[:, j, 0]
                ya = xt @ c_a + dwa / dt
                y_a[:, k] = ya
                xt = xt @ m_true_t + dwa[:, None] * k_ta + noise[:, j, 1, None] * k_tb
                xf = xf @ m_filt_t + (ya * dt)[:, None] * k_fa

        z = np.zeros((nb, 2))
        z_sub = np.empty((nb, n_sub, 2))
        sub_pos = n_sub - 1
        for k in range(n_steps - 1, -1, -1):
            z = z + z @ m1[k].T + y_a[:, k, None] * m2[k]
            if sub_pos >= 0 and k == sub_idx[sub_pos]:
                z_sub[:, sub_pos] = z
                sub_pos -= 1

        rhs = x_filt[batch] + z_sub @ err.T
        x_smooth[batch] = np.linalg.solve(w_sub[None], rhs[..., None])[..., 0]

    burn = default_burn_in(model, dt)
    margin = boundary_margin(model)
    start_t = max(burn * dt, margin)
    end_t = n_steps * dt - margin
    valid = (times >= start_t) & (times <= end_t)
    return EnsembleMeans(
        times=times,
        x_true=x_true,
        x_filt=x_filt,
        x_smooth=x_smooth,
        valid=valid,
        dt=dt,
        seed=config.seed,
    )


def _flat(prefix: str, matrix: np.ndarray, out: dict[str, float]) -> None:
    out[f"{prefix}_xx"] = float(matrix[0, 0])
    out[f"{prefix}_xp"] = float(matrix[0, 1])
    out[f"{prefix}_pp"] = float(matrix[1, 1])


def _jackknife_scalar(per_record: np.ndarray, fn) -> tuple[float, float]:
    """Leave-one-record-out standard error of a scalar derived from a
    per-record matrix average."""
    n = per_record.shape[0]
    total = per_record.sum(axis=0)
    full = fn(total / n)
    if n < 2:
        return full, float("nan")
    loo = np.array([fn((total - per_record[i]) / (n - 1)) for i in range(n)])
    stderr = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return full, stderr


def empirical_summary(
    model: ModelMatrices,
    sol: RiccatiSolution,
    v_unc: np.ndarray,
    ens: EnsembleMeans,
) -> tuple[dict[str, float], dict[str, float]]:
    """Monte-Carlo estimates and standard errors for one cell.

    Keys: reconstructed covariances ``v_f_* / v_s_* / v_t_*``, the
    sample covariances of the means ``cov_t_* / cov_f_* / cov_s_*``,
    mean-square errors ``mse_f / mse_s``, the overlap-form TrSD
    ``trsd_f / trsd_s`` and state metrics derived from the
    reconstructed covariances (jackknife errors).
    """
    hbar = model.hbar
    est: dict[str, float] = {}
    err: dict[str, float] = {}
    xt, xf, xs, valid = ens.x_true, ens.x_filt, ens.x_smooth, ens.valid

    pairs = {"f": xf, "s": xs}
    for tag, xc in pairs.items():
        recon, se = reconstruct_covariance(xt, xc, sol.v_true, valid)
        _flat(f"v_{tag}", recon, est)
        _flat(f"v_{tag}", se, err)
        cov, cov_se = sample_cov_means(xc, valid)
        _flat(f"cov_{tag}", cov, est)
        _flat(f"cov_{tag}", cov_se, err)
        mse, mse_se = mean_square_error(xt, xc, valid)
        est[f"mse_{tag}"] = mse
        err[f"mse_{tag}"] = mse_se
        v_c = sol.v_filt if tag == "f" else sol.v_smooth
        trsd, trsd_se = trsd_empirical(xt, xc, sol.v_true, v_c, hbar, valid)
        est[f"trsd_{tag}"] = trsd
        err[f"trsd_{tag}"] = trsd_se

        # state metrics from the reconstructed covariance
        delta = xc[:, valid] - xt[:, valid]
        per_record = np.einsum("rki,rkj->rij", delta, delta) / delta.shape[1]
        for name, fn in (
            (f"purity_{tag}", lambda ms: purity(_psd(ms + sol.v_true), hbar)),
            (f"squeeze_{tag}", lambda ms: squeezing(_psd(ms + sol.v_true), hbar).smaller),
            (f"antisqueeze_{tag}", lambda ms: squeezing(_psd(ms + sol.v_true), hbar).larger),
        ):
            est[name], err[name] = _jackknife_scalar(per_record, fn)

    recon_t, se_t = reconstruct_true_cov(v_unc, xt, valid)
    _flat("v_t", recon_t, est)
    _flat("v_t", se_t, err)
    cov_t, cov_t_se = sample_cov_means(xt, valid)
    _flat("cov_t", cov_t, est)
    _flat("cov_t", cov_t_se, err)
    per_record_t = np.einsum("rki,rkj->rij", xt[:, valid], xt[:, valid]) / int(valid.sum())
    for name, fn in (
        ("purity_t", lambda ms: purity(_psd(v_unc - ms), hbar)),
        ("squeeze_t", lambda ms: squeezing(_psd(v_unc - ms), hbar).smaller),
        ("antisqueeze_t", lambda ms: squeezing(_psd(v_unc - ms), hbar).larger),
    ):
        est[name], err[name] = _jackknife_scalar(per_record_t, fn)
    return est, err


def _psd(v: np.ndarray) -> np.ndarray:
    """Clip tiny negative eigenvalues from a noisy covariance estimate."""
    v = 0.5 * (v + v.T)
    eigs, vecs = np.linalg.eigh(v)
    if eigs[0] <= 0.0:
        eigs = np.maximum(eigs, 1e-12 * max(abs(eigs[-1]), 1e-300))
        v = (vecs * eigs) @ vecs.T
    return v
