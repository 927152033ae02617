"""Physical parameters and constant matrices of the monitored OPO.

The system is a below-threshold optical parametric oscillator whose
intracavity quadratures ``(x, p)`` obey a linear Langevin equation

    d x_vec = A x_vec dt + B dv,

while two homodyne detectors (Alice and Bob, fed by a variable beam
splitter of energy transmittance ``T``) produce currents

    y_m dt = C_m x_vec dt + D_m dv,        m = A, B,

with ``dv`` a 10-vector of independent vacuum quadrature increments
(one pair per vacuum port: intracavity loss, output coupler, beam
splitter, and one loss port per detection arm).  Everything downstream
(filtering, smoothing, metrics) only consumes the summary matrices

    A, Q = Cov(B dv),  C_m, R_m = Cov(D_m dv),  S_m = Cov(D_m dv, B dv),

which for this system evaluate to ``Q = hbar * gamma * I``, ``R_m = 1``
and ``S_m = -(hbar/2) C_m``.

Two construction routes are supported:

* physical parameters (pump, beam-splitter transmittance, per-arm
  losses, cavity escape efficiency), which also yield the full noise
  decomposition ``B, D_A, D_B``;
* effective parameters (``gamma, xi, eta_a, eta_b``), which pin the
  summary matrices directly and leave the noise decomposition unset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

__all__ = [
    "SystemParams",
    "ModelMatrices",
    "build_model",
    "efficiencies",
    "paper_defaults",
    "load_params",
    "save_params",
]

# SI Table 1 cavity values and Table 2 per-arm efficiency budgets.
_OUTPUT_COUPLER = 0.100          # energy transmittance of the output coupler
_INTRACAVITY_LOSS = 0.00282
_ROUND_TRIP_M = 0.489
_SPEED_OF_LIGHT = 3.0e8

_VISIBILITY = {"a": 0.992, "b": 0.993}
_PROPAGATION_EFF = {"a": 1.0 - 0.084, "b": 1.0 - 0.088}
_CLEARANCE_DB = {"a": -25.4, "b": -25.6}  # electronic-noise-to-shot-noise power ratio
_PHOTODIODE_EFF = {"a": 0.99, "b": 0.99}


def _arm_loss(arm: str) -> float:
    """Loss fraction L_m of one detection arm (escape efficiency excluded)."""
    elec_eff = 1.0 - 10.0 ** (_CLEARANCE_DB[arm] / 10.0)
    eff = (
        _VISIBILITY[arm] ** 2
        * _PROPAGATION_EFF[arm]
        * elec_eff
        * _PHOTODIODE_EFF[arm]
    )
    return 1.0 - eff


@dataclass(frozen=True)
class SystemParams:
    """Physical knobs of the OPO plus the two homodyne channels.

    Parameters
    ----------
    gamma : float
        Cavity decay half-rate (HWHM in angular frequency), rad/s.
    xi : float
        Normalized pump amplitude, ``0 <= xi < 1``; the x-quadrature
        variance diverges at threshold ``xi -> 1``.
    transmittance : float
        Energy transmittance ``T`` of the variable beam splitter
        feeding Alice (Bob receives the reflected ``1 - T``).
    loss_a, loss_b : float
        Per-arm loss fractions ``L_A, L_B`` in ``[0, 1)``.
    escape_eff : float
        Cavity escape efficiency ``eta_c`` in ``(0, 1]``.
    theta_a, theta_b : float
        Homodyne angles in radians (the CLI converts from degrees).
    hbar : float
        Quantum unit; the experiment normalizes ``hbar = 1`` but the
        symbolic formulas are kept hbar-aware.
    eta_a_override, eta_b_override : float or None
        Set by :meth:`from_effective` to pin the measurement
        efficiencies directly; ``None`` means "derive from the
        physical parameters".
    """

    gamma: float
    xi: float
    transmittance: float = 0.5
    loss_a: float = 0.0
    loss_b: float = 0.0
    escape_eff: float = 1.0
    theta_a: float = 0.0
    theta_b: float = 0.0
    hbar: float = 1.0
    eta_a_override: float | None = None
    eta_b_override: float | None = None

    def __post_init__(self):
        if not self.gamma > 0.0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not 0.0 <= self.xi < 1.0:
            raise ValueError(f"xi must lie in [0, 1), got {self.xi}")
        if not 0.0 <= self.transmittance <= 1.0:
            raise ValueError(
                f"transmittance must lie in [0, 1], got {self.transmittance}"
            )
        for name, loss in (("loss_a", self.loss_a), ("loss_b", self.loss_b)):
            if not 0.0 <= loss < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {loss}")
        if not 0.0 < self.escape_eff <= 1.0:
            raise ValueError(
                f"escape_eff must lie in (0, 1], got {self.escape_eff}"
            )
        if not self.hbar > 0.0:
            raise ValueError(f"hbar must be positive, got {self.hbar}")
        overrides = (self.eta_a_override, self.eta_b_override)
        if (overrides[0] is None) != (overrides[1] is None):
            raise ValueError("eta overrides must be set together")
        eta_a, eta_b = self.efficiencies()
        if not (0.0 <= eta_a <= 1.0 and 0.0 <= eta_b <= 1.0):
            raise ValueError(f"efficiencies out of range: {eta_a}, {eta_b}")
        if eta_a + eta_b > 1.0 + 1e-12:
            raise ValueError(
                f"eta_a + eta_b = {eta_a + eta_b} exceeds 1"
            )

    @classmethod
    def from_effective(
        cls,
        gamma: float,
        xi: float,
        eta_a: float,
        eta_b: float,
        theta_a: float = 0.0,
        theta_b: float = 0.0,
        hbar: float = 1.0,
    ) -> "SystemParams":
        """Build from the effective efficiencies used by the estimation
        equations, bypassing the beam-splitter/loss bookkeeping.

        The noise decomposition (``B``, ``D_m`` rows) is unavailable on
        this route; everything else is identical.
        """
        total = eta_a + eta_b
        nominal_t = eta_a / total if total > 0.0 else 0.0
        return cls(
            gamma=gamma,
            xi=xi,
            transmittance=nominal_t,
            theta_a=theta_a,
            theta_b=theta_b,
            hbar=hbar,
            eta_a_override=float(eta_a),
            eta_b_override=float(eta_b),
        )

    @classmethod
    def from_cavity(
        cls,
        output_coupler: float,
        intracavity_loss: float,
        round_trip_m: float,
        xi: float | None = None,
        parametric_gain: float | None = None,
        transmittance: float = 0.5,
        loss_a: float = 0.0,
        loss_b: float = 0.0,
        theta_a: float = 0.0,
        theta_b: float = 0.0,
        hbar: float = 1.0,
    ) -> "SystemParams":
        """Build from raw cavity parameters.

        ``gamma = c (T_c + L_c) / (2 l)`` and
        ``eta_c = T_c / (T_c + L_c)``; the pump can be given either as
        ``xi`` directly or as the parametric gain ``G+`` via
        ``xi = 1 - 1/sqrt(G+)``.
        """
        if (xi is None) == (parametric_gain is None):
            raise ValueError("give exactly one of xi or parametric_gain")
        if xi is None:
            xi = 1.0 - 1.0 / math.sqrt(parametric_gain)
        coupling = output_coupler + intracavity_loss
        gamma = _SPEED_OF_LIGHT * coupling / (2.0 * round_trip_m)
        return cls(
            gamma=gamma,
            xi=xi,
            transmittance=transmittance,
            loss_a=loss_a,
            loss_b=loss_b,
            escape_eff=output_coupler / coupling,
            theta_a=theta_a,
            theta_b=theta_b,
            hbar=hbar,
        )

    def efficiencies(self) -> tuple[float, float]:
        """Measurement efficiencies ``(eta_a, eta_b)`` of the two arms."""
        if self.eta_a_override is not None:
            return self.eta_a_override, self.eta_b_override
        eta_a = self.escape_eff * (1.0 - self.loss_a) * self.transmittance
        eta_b = self.escape_eff * (1.0 - self.loss_b) * (1.0 - self.transmittance)
        return eta_a, eta_b

    @property
    def eta_a(self) -> float:
        return self.efficiencies()[0]

    @property
    def eta_b(self) -> float:
        return self.efficiencies()[1]

    def with_angles(self, theta_a: float, theta_b: float) -> "SystemParams":
        return replace(self, theta_a=theta_a, theta_b=theta_b)

    def with_transmittance(self, transmittance: float) -> "SystemParams":
        if self.eta_a_override is not None:
            raise ValueError(
                "transmittance has no effect on effective-parameter systems"
            )
        return replace(self, transmittance=transmittance)


def efficiencies(params: SystemParams) -> tuple[float, float]:
    """Functional alias for :meth:`SystemParams.efficiencies`."""
    return params.efficiencies()


def paper_defaults(
    transmittance: float = 0.5,
    theta_a_deg: float = 65.0,
    theta_b_deg: float = 135.0,
) -> SystemParams:
    """Experimental operating point: ``xi = 0.70``,
    ``gamma = 2 pi * 5.0 MHz``, per-arm losses from the published
    efficiency budget (giving ``eta_a ~= 0.865 T`` and
    ``eta_b ~= 0.863 (1 - T)``), ``hbar = 1``.
    """
    coupling = _OUTPUT_COUPLER + _INTRACAVITY_LOSS
    return SystemParams(
        gamma=2.0 * math.pi * 5.0e6,
        xi=0.70,
        transmittance=transmittance,
        loss_a=_arm_loss("a"),
        loss_b=_arm_loss("b"),
        escape_eff=_OUTPUT_COUPLER / coupling,
        theta_a=math.radians(theta_a_deg),
        theta_b=math.radians(theta_b_deg),
        hbar=1.0,
    )


def transmittance_for_eta_a(eta_a: float, base: SystemParams | None = None) -> float:
    """Beam-splitter transmittance that realizes a target ``eta_a``.

    Inverts ``eta_a = eta_c (1 - L_A) T`` for the given parameter set
    (default: :func:`paper_defaults`), e.g. ``eta_a = 0.43`` maps to
    ``T ~= 0.497``.
    """
    if base is None:
        base = paper_defaults()
    prefactor = base.escape_eff * (1.0 - base.loss_a)
    t = eta_a / prefactor
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"eta_a = {eta_a} is not reachable (needs T = {t})")
    return t


@dataclass(frozen=True)
class ModelMatrices:
    """Constant matrices of the linear measurement model.

    ``a_mat`` is the 2x2 drift, ``q_mat`` the process-noise covariance,
    ``c_a``/``c_b`` the measurement rows, ``r_a``/``r_b`` the scalar
    measurement-noise covariances and ``s_a``/``s_b`` the
    process/measurement cross-covariance rows.  ``b_mat`` (2x10) and
    ``d_a``/``d_b`` (10,) hold the underlying vacuum-noise
    decomposition when the model was built from physical loss
    parameters, else ``None``.
    """

    a_mat: np.ndarray
    q_mat: np.ndarray
    c_a: np.ndarray
    c_b: np.ndarray
    r_a: float
    r_b: float
    s_a: np.ndarray
    s_b: np.ndarray
    hbar: float = 1.0
    b_mat: np.ndarray | None = None
    d_a: np.ndarray | None = None
    d_b: np.ndarray | None = None

    def __post_init__(self):
        for name in ("a_mat", "q_mat", "c_a", "c_b", "s_a", "s_b"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.a_mat.shape != (2, 2) or self.q_mat.shape != (2, 2):
            raise ValueError("a_mat and q_mat must be 2x2")
        for name in ("c_a", "c_b", "s_a", "s_b"):
            if getattr(self, name).shape != (2,):
                raise ValueError(f"{name} must have shape (2,)")
        if not np.allclose(self.q_mat, self.q_mat.T):
            raise ValueError("q_mat must be symmetric")
        if self.r_a <= 0.0 or self.r_b <= 0.0:
            raise ValueError("measurement noise covariances must be positive")

    @property
    def channels(self) -> tuple[tuple[np.ndarray, float, np.ndarray], ...]:
        """Both measurement channels as ``(c, r, s)`` triples."""
        return ((self.c_a, self.r_a, self.s_a), (self.c_b, self.r_b, self.s_b))

    def decay_rate(self) -> float:
        """Cavity half-rate recovered from the drift eigenvalues."""
        return float(-0.5 * (self.a_mat[0, 0] + self.a_mat[1, 1]))


def _measurement_row(gamma: float, eta: float, theta: float, hbar: float) -> np.ndarray:
    amp = math.sqrt(4.0 * gamma * eta / hbar)
    return np.array([amp * math.cos(theta), amp * math.sin(theta)])


def _noise_rows(params: SystemParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """B matrix and D rows of the 10-mode vacuum decomposition.

    Mode order: intracavity loss, output coupler, beam-splitter vacuum
    port, Alice's loss port, Bob's loss port; one (x, p) quadrature
    pair each.  The detector rows carry the printed sign conventions.
    """
    gamma_tc = 2.0 * params.gamma * params.escape_eff
    gamma_lc = 2.0 * params.gamma * (1.0 - params.escape_eff)
    scale = math.sqrt(params.hbar / 2.0)
    b = np.zeros((2, 10))
    b[0, 0] = b[1, 1] = scale * math.sqrt(gamma_lc)
    b[0, 2] = b[1, 3] = scale * math.sqrt(gamma_tc)

    t = params.transmittance
    coeffs = {
        "a": [
            0.0,
            -math.sqrt((1.0 - params.loss_a) * t),
            -math.sqrt((1.0 - params.loss_a) * (1.0 - t)),
            -math.sqrt(params.loss_a),
            0.0,
        ],
        "b": [
            0.0,
            -math.sqrt((1.0 - params.loss_b) * (1.0 - t)),
            math.sqrt((1.0 - params.loss_b) * t),
            0.0,
            -math.sqrt(params.loss_b),
        ],
    }
    rows = {}
    for arm, theta in (("a", params.theta_a), ("b", params.theta_b)):
        d = np.zeros(10)
        for j, dj in enumerate(coeffs[arm]):
            d[2 * j] = dj * math.cos(theta)
            d[2 * j + 1] = dj * math.sin(theta)
        rows[arm] = d
    return b, rows["a"], rows["b"]


def build_model(params: SystemParams) -> ModelMatrices:
    """Assemble the constant matrices from a validated parameter set.

    Pure and deterministic: identical parameters give bit-identical
    matrices.
    """
    gamma, xi, hbar = params.gamma, params.xi, params.hbar
    eta_a, eta_b = params.efficiencies()

    a_mat = np.diag([-gamma * (1.0 - xi), -gamma * (1.0 + xi)])
    q_mat = hbar * gamma * np.eye(2)
    c_a = _measurement_row(gamma, eta_a, params.theta_a, hbar)
    c_b = _measurement_row(gamma, eta_b, params.theta_b, hbar)
    s_a = -(hbar / 2.0) * c_a
    s_b = -(hbar / 2.0) * c_b

    if params.eta_a_override is None:
        b_mat, d_a, d_b = _noise_rows(params)
    else:
        b_mat = d_a = d_b = None

    return ModelMatrices(
        a_mat=a_mat,
        q_mat=q_mat,
        c_a=c_a,
        c_b=c_b,
        r_a=1.0,
        r_b=1.0,
        s_a=s_a,
        s_b=s_b,
        hbar=hbar,
        b_mat=b_mat,
        d_a=d_a,
        d_b=d_b,
    )


# --- flat key-value parameter files -----------------------------------------

_PARAM_KEYS = (
    "gamma",
    "xi",
    "transmittance",
    "loss_a",
    "loss_b",
    "escape_eff",
    "theta_a",
    "theta_b",
    "hbar",
    "eta_a_override",
    "eta_b_override",
)


def save_params(params: SystemParams, path: str | Path) -> None:
    """Write a flat ``key = value`` parameter file (angles in radians)."""
    lines = ["# opo-smoothing system parameters (angles in radians)"]
    for key in _PARAM_KEYS:
        value = getattr(params, key)
        if value is None:
            continue
        lines.append(f"{key} = {value!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_params(path: str | Path) -> SystemParams:
    """Read a flat ``key = value`` parameter file written by
    :func:`save_params` (unknown keys are rejected)."""
    values: dict[str, float] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, text = line.partition("=")
        key = key.strip()
        if key not in _PARAM_KEYS:
            raise ValueError(f"{path}:{lineno}: unknown parameter {key!r}")
        values[key] = float(text.strip())
    try:
        return SystemParams(**values)
    except TypeError as exc:
        raise ValueError(f"{path}: incomplete parameter file: {exc}") from None
