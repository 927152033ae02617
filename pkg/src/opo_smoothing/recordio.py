"""CSV formats for measurement records and estimated trajectories.

Record files::

    # schema=opo-smoothing/record v1
    # dt=<seconds>
    # seed=<int or none>
    # burn_in=<samples>
    t,y_a,y_b
    ...

Trajectory files carry the three mean series plus the covariance set
as a JSON metadata line, so downstream plotting needs no physics::

    # schema=opo-smoothing/trajectory v1
    # dt=<seconds>
    # cov={"hbar": ..., "v_unc": [[...]], ...}
    t,x_T,p_T,x_F,p_F,x_S,p_S
    ...
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .simulate import MeasurementRecord, StateTrajectory

__all__ = [
    "RECORD_SCHEMA",
    "TRAJECTORY_SCHEMA",
    "save_record",
    "load_record",
    "save_trajectories",
]

RECORD_SCHEMA = "opo-smoothing/record v1"
TRAJECTORY_SCHEMA = "opo-smoothing/trajectory v1"


def save_record(record: MeasurementRecord, path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# schema={RECORD_SCHEMA}\n")
        fh.write(f"# dt={record.dt!r}\n")
        fh.write(f"# seed={record.seed if record.seed is not None else 'none'}\n")
        fh.write(f"# burn_in={record.burn_in}\n")
        fh.write("t,y_a,y_b\n")
        times = record.times
        for k in range(len(record)):
            fh.write(f"{times[k]:.17g},{record.y_a[k]:.17g},{record.y_b[k]:.17g}\n")


def _read_metadata(path: Path, expected_schema: str) -> tuple[dict[str, str], int]:
    meta: dict[str, str] = {}
    n_header = 0
    with path.open() as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            n_header += 1
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
    schema = meta.get("schema")
    if schema != expected_schema:
        raise ValueError(
            f"{path}: expected schema {expected_schema!r}, found {schema!r}"
        )
    return meta, n_header


def load_record(path: str | Path) -> MeasurementRecord:
    """Read a record file (rejects files with a different schema)."""
    path = Path(path)
    meta, n_header = _read_metadata(path, RECORD_SCHEMA)
    if "dt" not in meta:
        raise ValueError(f"{path}: missing '# dt=' metadata line")
    data = np.loadtxt(path, delimiter=",", skiprows=n_header + 1, ndmin=2)
    if data.shape[1] != 3:
        raise ValueError(f"{path}: expected columns t,y_a,y_b")
    dt = float(meta["dt"])
    times = data[:, 0]
    if len(times) > 1 and not np.allclose(np.diff(times), dt, rtol=1e-9, atol=0.0):
        raise ValueError(f"{path}: time column is not uniform at dt={dt}")
    seed_text = meta.get("seed", "none")
    return MeasurementRecord(
        dt=dt,
        y_a=data[:, 1],
        y_b=data[:, 2],
        seed=None if seed_text == "none" else int(seed_text),
        burn_in=int(meta.get("burn_in", 0)),
    )


def save_trajectories(
    path: str | Path,
    true_traj: StateTrajectory,
    filtered: StateTrajectory,
    smoothed: StateTrajectory,
    *,
    v_unc: np.ndarray,
    hbar: float = 1.0,
) -> None:
    """Write aligned true/filtered/smoothed means with covariance
    metadata (the steady-state covariances each trajectory carries)."""
    path = Path(path)
    times = filtered.times
    for traj in (true_traj, smoothed):
        if not np.array_equal(traj.times, times):
            raise ValueError("trajectories do not share timestamps")
    valid = true_traj.valid & filtered.valid & smoothed.valid
    valid_times = times[valid]
    cov_meta = {
        "hbar": hbar,
        "v_unc": np.asarray(v_unc).tolist(),
        "v_true": np.asarray(true_traj.cov).tolist(),
        "v_filt": np.asarray(filtered.cov).tolist(),
        "v_smooth": np.asarray(smoothed.cov).tolist(),
        "valid_from": float(valid_times[0]) if len(valid_times) else None,
        "valid_to": float(valid_times[-1]) if len(valid_times) else None,
    }
    dt = float(times[1] - times[0]) if len(times) > 1 else 0.0
    with path.open("w") as fh:
        fh.write(f"# schema={TRAJECTORY_SCHEMA}\n")
        fh.write(f"# dt={dt!r}\n")
        fh.write(f"# cov={json.dumps(cov_meta)}\n")
        fh.write("t,x_T,p_T,x_F,p_F,x_S,p_S\n")
        for k in range(len(times)):
            fh.write(
                f"{times[k]:.17g},"
                f"{true_traj.means[k, 0]:.17g},{true_traj.means[k, 1]:.17g},"
                f"{filtered.means[k, 0]:.17g},{filtered.means[k, 1]:.17g},"
                f"{smoothed.means[k, 0]:.17g},{smoothed.means[k, 1]:.17g}\n"
            )
