"""Steady-state Lyapunov and Riccati solvers for small matrices.

The filtering covariances solve algebraic Riccati equations of the form

    0 = a V + V a^T + q - sum_m (V c_m^T + s_m^T) r_m^{-1} (V c_m^T + s_m^T)^T

and the backward (retrofilter) information matrix solves the same form
under the substitution ``a -> a_bar^T``, ``q -> c^T r^{-1} c``, with the
quadratic term generated by a pseudo-channel built from the hidden
gain.  Both are solved by damped forward integration of the matching
time-dependent equation until the algebraic residual is negligible:
the fixed point of the Euler map is the algebraic solution regardless
of the step size, so the step is chosen for stability only.

All functions broadcast over leading batch dimensions; a single system
is the batch-of-one case.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "lyapunov_steady",
    "riccati_rhs",
    "solve_riccati_steady",
    "RiccatiConvergenceError",
]

#: channel triple (c, r, s): measurement row(s) (..., 2), noise
#: covariance (...,), cross-covariance row(s) (..., 2)
Channel = tuple[np.ndarray, np.ndarray, np.ndarray]


class RiccatiConvergenceError(RuntimeError):
    """Raised when the damped integration fails to reach the residual
    tolerance; carries the iteration count and worst scaled residual."""

    def __init__(self, steps: int, residual: float, tol: float):
        self.steps = steps
        self.residual = residual
        super().__init__(
            f"Riccati integration did not converge: scaled residual "
            f"{residual:.3e} > {tol:.1e} after {steps} steps"
        )


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.swapaxes(-1, -2))


def _fro(m: np.ndarray) -> np.ndarray:
    """Frobenius norm over the trailing 2x2 block."""
    return np.sqrt(np.sum(m * m, axis=(-2, -1)))


def _vdim(x: np.ndarray) -> np.ndarray:
    """Align a scalar-or-batch factor against (..., 2) vectors."""
    return x[..., None] if x.ndim else x


def _mdim(x: np.ndarray) -> np.ndarray:
    """Align a scalar-or-batch factor against (..., 2, 2) matrices."""
    return x[..., None, None] if x.ndim else x


def lyapunov_steady(a: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Solve ``a V + V a^T + q = 0`` for Hurwitz ``a`` (batched).

    Uses the Kronecker-sum linear system, which is exact and cheap for
    2x2 blocks.
    """
    a = np.asarray(a, dtype=float)
    q = np.asarray(q, dtype=float)
    eigs = np.linalg.eigvals(a)
    if not np.all(eigs.real < 0.0):
        raise ValueError("drift matrix is not Hurwitz; no steady state exists")
    n = a.shape[-1]
    eye = np.eye(n)
    if a.ndim == 2:
        kron = np.kron(a, eye) + np.kron(eye, a)
    else:
        kron = (
            np.einsum("...ij,kl->...ikjl", a, eye)
            + np.einsum("ij,...kl->...ikjl", eye, a)
        ).reshape(a.shape[:-2] + (n * n, n * n))
    shape = np.broadcast_shapes(a.shape, q.shape)
    rhs = -np.broadcast_to(q, shape).reshape(shape[:-2] + (n * n,))
    kron = np.broadcast_to(kron, shape[:-2] + (n * n, n * n))
    v = np.linalg.solve(kron, rhs[..., None])[..., 0].reshape(shape)
    return _sym(v)


def riccati_rhs(
    v: np.ndarray,
    a: np.ndarray,
    q: np.ndarray,
    channels: list[Channel],
) -> np.ndarray:
    """Time derivative of the filtering covariance at ``v`` (batched)."""
    rhs = a @ v + v @ a.swapaxes(-1, -2) + q
    for c, r, s in channels:
        gain = np.einsum("...ij,...j->...i", v, c) + s
        rhs = rhs - gain[..., :, None] * gain[..., None, :] / _mdim(np.asarray(r))
    return rhs


def _stiffness(
    v: np.ndarray,
    a: np.ndarray,
    channels: list[Channel],
) -> np.ndarray:
    """Local Lipschitz estimate of the Riccati map, per batch cell."""
    rate = 2.0 * _fro(np.broadcast_to(a, v.shape))
    for c, r, s in channels:
        gain = np.einsum("...ij,...j->...i", v, c) + s
        c_norm = np.sqrt(np.sum(c * c, axis=-1))
        g_norm = np.sqrt(np.sum(gain * gain, axis=-1))
        rate = rate + 2.0 * c_norm * g_norm / np.asarray(r)
    return rate


def solve_riccati_steady(
    a: np.ndarray,
    q: np.ndarray,
    channels: list[Channel],
    v0: np.ndarray,
    *,
    rate_scale: float | np.ndarray = 1.0,
    value_scale: float | np.ndarray = 1.0,
    tol: float = 1e-12,
    max_steps: int = 2_000_000,
    check_every: int = 64,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Steady-state solution of the filtering Riccati equation.

    Integrates ``dV/dt = riccati_rhs(V)`` forward from ``v0`` with a
    stability-bounded step until ``|dV/dt| <= tol * |q|`` in Frobenius
    norm, symmetrizing every step.  ``rate_scale`` and ``value_scale``
    nondimensionalize time and covariance internally so the iteration
    behaves identically at laboratory scales (gamma ~ 1e7 rad/s) and at
    unit-test scales.

    Returns ``(v, scaled_residual, n_steps)``; raises
    :class:`RiccatiConvergenceError` if the tolerance is not met.
    """
    a = np.asarray(a, dtype=float)
    q = np.asarray(q, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    omega = np.asarray(rate_scale, dtype=float)
    nu = np.asarray(value_scale, dtype=float)
    if np.any(omega <= 0.0) or np.any(nu <= 0.0):
        raise ValueError("rate_scale and value_scale must be positive")

    # scaled problem: V = nu * V~, t = t~ / omega
    a_s = a / _mdim(omega)
    q_s = q / _mdim(omega * nu)
    chan_s: list[Channel] = []
    for c, r, s in channels:
        c = np.asarray(c, dtype=float)
        r = np.asarray(r, dtype=float)
        s = np.asarray(s, dtype=float)
        c_s = c * np.sqrt(_vdim(nu) / (_vdim(omega) * _vdim(r)))
        s_s = s / np.sqrt(_vdim(nu) * _vdim(omega) * _vdim(r))
        chan_s.append((c_s, np.ones(r.shape), s_s))

    v_init = _sym(v0 / _mdim(nu))
    rhs0 = riccati_rhs(v_init, a_s, q_s, chan_s)
    shape = rhs0.shape
    ref = np.maximum(_fro(np.broadcast_to(q_s, shape)), 1e-300)

    steps = 0
    res = _fro(rhs0) / ref
    damping = 0.45
    for _attempt in range(8):
        v = np.broadcast_to(v_init, shape).copy()
        rhs = rhs0.copy()
        res = _fro(rhs) / ref
        best = float(np.max(res))
        steps = 0
        diverged = False
        while steps < max_steps:
            if np.max(res) <= tol:
                return v * _mdim(nu), res, steps
            h = damping * 2.0 / np.maximum(_stiffness(v, a_s, chan_s), 1e-12)
            h = h[..., None, None]
            for _ in range(check_every):
                v = _sym(v + h * rhs)
                rhs = riccati_rhs(v, a_s, q_s, chan_s)
            steps += check_every
            res = _fro(rhs) / ref
            worst = float(np.max(res))
            if not np.isfinite(worst) or worst > 1e4 * max(best, 1.0):
                diverged = True
                break
            best = min(best, worst)
        if not diverged:
            raise RiccatiConvergenceError(steps, float(np.max(res)), tol)
        damping *= 0.5
    raise RiccatiConvergenceError(steps, float(np.max(res)), tol)
