"""State-quality metrics: purity, trace-squared deviation, squeezing.

All metrics are functions of the 2x2 covariance ``V`` of a Gaussian
state (plus ``hbar``):

* purity ``P = 1 / sqrt(det(2 V / hbar))``;
* squeezing / anti-squeezing: the smaller / larger eigenvalue of
  ``(2 / hbar) V``, quoted either raw (vacuum = 1) or in dB
  (``10 log10``, vacuum = 0 dB);
* average trace-squared deviation from the true state, either in the
  deterministic form ``D(C) = P(T) - P(C)`` or as the record-averaged
  Gaussian-overlap estimator that does not presume the reconstructed
  covariances.

The Monte-Carlo estimators accept mean series shaped ``(records,
samples, 2)`` and return ``(value, standard_error)`` with the standard
error taken across records (each record is an independent replicate).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "purity",
    "squeezing",
    "SqueezingResult",
    "eig_to_db",
    "db_to_eig",
    "trsd_theory",
    "trsd_empirical",
    "reconstruct_covariance",
    "reconstruct_true_cov",
    "sample_cov_means",
    "mean_square_error",
    "ConditionalMetrics",
    "conditional_metrics",
    "Recoveries",
    "recoveries",
    "MetricsReport",
    "theory_report",
]


def _check_cov(v: np.ndarray, name: str = "covariance") -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (2, 2):
        raise ValueError(f"{name} must be 2x2, got {v.shape}")
    if not np.allclose(v, v.T, rtol=1e-8, atol=1e-12 * float(np.max(np.abs(v)))):
        raise ValueError(f"{name} must be symmetric")
    if np.any(np.linalg.eigvalsh(v) <= 0.0):
        raise ValueError(f"{name} must be positive definite")
    return v


def purity(v: np.ndarray, hbar: float = 1.0) -> float:
    """``1 / sqrt(det(2 V / hbar))``; equals 1 for pure states."""
    v = _check_cov(v)
    return float(1.0 / math.sqrt(np.linalg.det(2.0 * v / hbar)))


def eig_to_db(value: float | np.ndarray) -> float | np.ndarray:
    """Noise eigenvalue to dB relative to vacuum (vacuum = 0 dB)."""
    return 10.0 * np.log10(value)


def db_to_eig(db: float | np.ndarray) -> float | np.ndarray:
    return 10.0 ** (np.asarray(db) / 10.0)


@dataclass(frozen=True)
class SqueezingResult:
    smaller: float
    larger: float
    smaller_db: float
    larger_db: float


def squeezing(v: np.ndarray, hbar: float = 1.0) -> SqueezingResult:
    """Eigenvalues of ``(2 / hbar) V`` in ascending order plus dB forms."""
    v = _check_cov(v)
    eigs = np.linalg.eigvalsh(2.0 * v / hbar)
    return SqueezingResult(
        smaller=float(eigs[0]),
        larger=float(eigs[1]),
        smaller_db=float(eig_to_db(eigs[0])),
        larger_db=float(eig_to_db(eigs[1])),
    )


def trsd_theory(v_t: np.ndarray, v_c: np.ndarray, hbar: float = 1.0) -> float:
    """Record-independent average trace-squared deviation,
    ``(hbar/2) (det V_T^{-1/2} - det V_C^{-1/2})``.

    Requires ``det V_T <= det V_C`` (the conditioning can only blur the
    true state); equals ``purity(V_T) - purity(V_C)`` and is
    nonnegative.
    """
    v_t = _check_cov(v_t, "v_t")
    v_c = _check_cov(v_c, "v_c")
    det_t = float(np.linalg.det(v_t))
    det_c = float(np.linalg.det(v_c))
    if det_t > det_c * (1.0 + 1e-9):
        raise ValueError(
            f"det V_T = {det_t} exceeds det V_C = {det_c}: inconsistent inputs"
        )
    return float(hbar / 2.0 * (det_t**-0.5 - det_c**-0.5))


def _stack_records(means: np.ndarray, valid: np.ndarray | None) -> np.ndarray:
    """Normalize mean series to shape (records, samples, 2)."""
    means = np.asarray(means, dtype=float)
    if means.ndim == 2:
        means = means[None]
    if means.ndim != 3 or means.shape[-1] != 2:
        raise ValueError("means must have shape (samples, 2) or (records, samples, 2)")
    if valid is not None:
        means = means[:, np.asarray(valid, dtype=bool)]
    if means.shape[1] == 0:
        raise ValueError("no samples left after masking")
    return means


def _record_average(per_record: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard error across the record axis (axis 0)."""
    n = per_record.shape[0]
    value = per_record.mean(axis=0)
    if n > 1:
        stderr = per_record.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        stderr = np.full_like(value, np.nan)
    return value, stderr


def trsd_empirical(
    true_means: np.ndarray,
    cond_means: np.ndarray,
    v_t: np.ndarray,
    v_c: np.ndarray,
    hbar: float = 1.0,
    valid: np.ndarray | None = None,
) -> tuple[float, float]:
    """Monte-Carlo average trace-squared deviation.

    Evaluates the Gaussian-overlap form

        D = (hbar/2) (det V_T^{-1/2} + det V_C^{-1/2})
            - 4 pi hbar E[ g(<x>_T - <x>_C, V_T + V_C) ]

    with ``g(x, V)`` the centered normal density, averaging over all
    samples of all records; the standard error comes from the spread of
    per-record averages.  Converges to :func:`trsd_theory` as the
    record count grows.
    """
    v_t = _check_cov(v_t, "v_t")
    v_c = _check_cov(v_c, "v_c")
    xt = _stack_records(true_means, valid)
    xc = _stack_records(cond_means, valid)
    if xt.shape != xc.shape:
        raise ValueError("true and conditional mean series must be aligned")
    v_sum = v_t + v_c
    prec = np.linalg.inv(v_sum)
    norm = 1.0 / (2.0 * math.pi * math.sqrt(np.linalg.det(v_sum)))
    delta = xt - xc
    quad = np.einsum("rki,ij,rkj->rk", delta, prec, delta)
    overlap = norm * np.exp(-0.5 * quad)
    const = hbar / 2.0 * (np.linalg.det(v_t) ** -0.5 + np.linalg.det(v_c) ** -0.5)
    per_record = const - 4.0 * math.pi * hbar * overlap.mean(axis=1)
    value, stderr = _record_average(per_record)
    return float(value), float(stderr)


def reconstruct_covariance(
    true_means: np.ndarray,
    cond_means: np.ndarray,
    v_t: np.ndarray,
    valid: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Covariance reconstructed from mean-square-error matrices,
    ``V_C ~ E[(<x>_C - <x>_T)(<x>_C - <x>_T)^T] + V_T`` with the theory
    ``V_T`` (removes the common-mode noise of a reconstructed true
    covariance).  Returns ``(matrix, elementwise standard error)``.
    """
    v_t = np.asarray(v_t, dtype=float)
    xt = _stack_records(true_means, valid)
    xc = _stack_records(cond_means, valid)
    delta = xc - xt
    per_record = np.einsum("rki,rkj->rij", delta, delta) / delta.shape[1]
    value, stderr = _record_average(per_record)
    return value + v_t, stderr


def sample_cov_means(
    means: np.ndarray,
    valid: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Second-moment matrix of a stationary zero-mean mean process.

    The conditional means wander around the unconditional mean (zero),
    so the moment is taken about zero rather than the sample average.
    """
    x = _stack_records(means, valid)
    per_record = np.einsum("rki,rkj->rij", x, x) / x.shape[1]
    return _record_average(per_record)


def reconstruct_true_cov(
    v_unc: np.ndarray,
    true_means: np.ndarray,
    valid: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """True covariance via ``V_T ~ V_unc - Cov(<x>_T)`` (the noisier
    estimator, used only for true-state displays)."""
    cov, stderr = sample_cov_means(true_means, valid)
    return np.asarray(v_unc, dtype=float) - cov, stderr


def mean_square_error(
    true_means: np.ndarray,
    cond_means: np.ndarray,
    valid: np.ndarray | None = None,
) -> tuple[float, float]:
    """``E[|<x>_C - <x>_T|^2]``; equals ``tr(V_C - V_T)`` in theory."""
    xt = _stack_records(true_means, valid)
    xc = _stack_records(cond_means, valid)
    per_record = np.sum((xc - xt) ** 2, axis=-1).mean(axis=1)
    value, stderr = _record_average(per_record)
    return float(value), float(stderr)


@dataclass(frozen=True)
class ConditionalMetrics:
    """The four per-state quantities for one conditioning."""

    purity: float
    trsd: float
    squeeze: float
    antisqueeze: float
    squeeze_db: float
    antisqueeze_db: float


def conditional_metrics(
    v_c: np.ndarray, v_t: np.ndarray, hbar: float = 1.0
) -> ConditionalMetrics:
    sq = squeezing(v_c, hbar)
    return ConditionalMetrics(
        purity=purity(v_c, hbar),
        trsd=trsd_theory(v_t, v_c, hbar),
        squeeze=sq.smaller,
        antisqueeze=sq.larger,
        squeeze_db=sq.smaller_db,
        antisqueeze_db=sq.larger_db,
    )


@dataclass(frozen=True)
class Recoveries:
    """Smoothed-minus-filtered improvements, signed so that positive
    means smoothing helped: purity rises, the other three fall."""

    purity: float
    trsd: float
    squeeze: float
    antisqueeze: float


def recoveries(filtered: ConditionalMetrics, smoothed: ConditionalMetrics) -> Recoveries:
    return Recoveries(
        purity=smoothed.purity - filtered.purity,
        trsd=filtered.trsd - smoothed.trsd,
        squeeze=filtered.squeeze - smoothed.squeeze,
        antisqueeze=filtered.antisqueeze - smoothed.antisqueeze,
    )


@dataclass
class MetricsReport:
    """Every metric for one parameter point.

    Theory entries are always present; ``empirical`` and ``mc_stderr``
    are flat dictionaries filled by Monte-Carlo runs (keys like
    ``trsd_f``, ``mse_s``, ``v_f_xx`` ...).
    """

    eta_a: float
    eta_b: float
    theta_a_deg: float
    theta_b_deg: float
    xi: float
    gamma: float
    hbar: float
    purity_unc: float
    purity_t: float
    purity_f: float
    purity_s: float
    trsd_f: float
    trsd_s: float
    squeeze_unc: float
    squeeze_t: float
    squeeze_f: float
    squeeze_s: float
    antisqueeze_unc: float
    antisqueeze_t: float
    antisqueeze_f: float
    antisqueeze_s: float
    squeeze_db_unc: float
    squeeze_db_t: float
    squeeze_db_f: float
    squeeze_db_s: float
    antisqueeze_db_unc: float
    antisqueeze_db_t: float
    antisqueeze_db_f: float
    antisqueeze_db_s: float
    recovery_p: float
    recovery_d: float
    recovery_s: float
    recovery_a: float
    empirical: dict[str, float] = field(default_factory=dict)
    mc_stderr: dict[str, float] = field(default_factory=dict)


def theory_report(sol, v_unc: np.ndarray, params) -> MetricsReport:
    """Assemble the deterministic metrics for one Riccati solution."""
    hbar = params.hbar
    f = conditional_metrics(sol.v_filt, sol.v_true, hbar)
    s = conditional_metrics(sol.v_smooth, sol.v_true, hbar)
    t = conditional_metrics(sol.v_true, sol.v_true, hbar)
    sq_unc = squeezing(v_unc, hbar)
    rec = recoveries(f, s)
    eta_a, eta_b = params.efficiencies()
    return MetricsReport(
        eta_a=eta_a,
        eta_b=eta_b,
        theta_a_deg=math.degrees(params.theta_a),
        theta_b_deg=math.degrees(params.theta_b),
        xi=params.xi,
        gamma=params.gamma,
        hbar=hbar,
        purity_unc=purity(v_unc, hbar),
        purity_t=t.purity,
        purity_f=f.purity,
        purity_s=s.purity,
        trsd_f=f.trsd,
        trsd_s=s.trsd,
        squeeze_unc=sq_unc.smaller,
        squeeze_t=t.squeeze,
        squeeze_f=f.squeeze,
        squeeze_s=s.squeeze,
        antisqueeze_unc=sq_unc.larger,
        antisqueeze_t=t.antisqueeze,
        antisqueeze_f=f.antisqueeze,
        antisqueeze_s=s.antisqueeze,
        squeeze_db_unc=sq_unc.smaller_db,
        squeeze_db_t=t.squeeze_db,
        squeeze_db_f=f.squeeze_db,
        squeeze_db_s=s.squeeze_db,
        antisqueeze_db_unc=sq_unc.larger_db,
        antisqueeze_db_t=t.antisqueeze_db,
        antisqueeze_db_f=f.antisqueeze_db,
        antisqueeze_db_s=s.antisqueeze_db,
        recovery_p=rec.purity,
        recovery_d=rec.trsd,
        recovery_s=rec.squeeze,
        recovery_a=rec.antisqueeze,
    )
