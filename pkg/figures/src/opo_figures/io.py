"""Readers for the opo-smoothing CSV/JSON interchange formats.

This package deliberately re-implements the parsing against the
documented schemas instead of importing the core library: the files are
the interface.  Every reader validates the schema line and refuses
anything it does not recognize.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SWEEP_SCHEMA = "opo-smoothing/sweep v1"
TRAJECTORY_SCHEMA = "opo-smoothing/trajectory v1"


class SchemaError(ValueError):
    """Input file does not carry the expected schema version."""


def _read_header(path: Path) -> tuple[dict[str, str], int]:
    meta: dict[str, str] = {}
    count = 0
    with path.open() as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            count += 1
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                meta[key.strip()] = value.strip()
    return meta, count


def _check_schema(path: Path, meta: dict[str, str], expected: str) -> None:
    found = meta.get("schema")
    if found != expected:
        raise SchemaError(f"{path}: expected schema {expected!r}, found {found!r}")


@dataclass
class SweepTable:
    """One sweep CSV plus its JSON sidecar."""

    kind: str
    columns: dict[str, np.ndarray]
    optimal: dict[str, dict]
    provenance: dict

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values())))

    def require(self, *names: str) -> None:
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise ValueError(f"sweep table is missing columns: {missing}")


def load_sweep(csv_path: str | Path, sidecar_path: str | Path | None = None) -> SweepTable:
    csv_path = Path(csv_path)
    meta, n_header = _read_header(csv_path)
    _check_schema(csv_path, meta, SWEEP_SCHEMA)
    kind = meta.get("kind", "")
    with csv_path.open() as fh:
        for _ in range(n_header):
            next(fh)
        names = next(fh).strip().split(",")
        if not fh.readline().strip():
            raise ValueError(f"{csv_path}: sweep table has no rows")
    data = np.loadtxt(csv_path, delimiter=",", skiprows=n_header + 1, ndmin=2)
    if data.shape[1] != len(names):
        raise ValueError(f"{csv_path}: row width does not match the header")
    columns = {name: data[:, i] for i, name in enumerate(names)}

    optimal: dict[str, dict] = {}
    provenance: dict = {}
    if sidecar_path is None:
        candidate = csv_path.with_suffix(".json")
        sidecar_path = candidate if candidate.exists() else None
    if sidecar_path is not None:
        payload = json.loads(Path(sidecar_path).read_text())
        if payload.get("schema") != SWEEP_SCHEMA:
            raise SchemaError(
                f"{sidecar_path}: expected schema {SWEEP_SCHEMA!r}, "
                f"found {payload.get('schema')!r}"
            )
        optimal = payload.get("optimal", {})
        provenance = payload.get("provenance", {})
    return SweepTable(kind=kind, columns=columns, optimal=optimal, provenance=provenance)


@dataclass
class TrajectoryTable:
    """Aligned mean trajectories plus the covariance metadata block."""

    times: np.ndarray
    x_true: np.ndarray
    x_filt: np.ndarray
    x_smooth: np.ndarray
    cov: dict

    def valid_slice(self) -> np.ndarray:
        lo = self.cov.get("valid_from")
        hi = self.cov.get("valid_to")
        mask = np.ones(len(self.times), dtype=bool)
        if lo is not None:
            mask &= self.times >= lo
        if hi is not None:
            mask &= self.times <= hi
        return mask if mask.any() else np.ones(len(self.times), dtype=bool)


def load_trajectory(path: str | Path) -> TrajectoryTable:
    path = Path(path)
    meta, n_header = _read_header(path)
    _check_schema(path, meta, TRAJECTORY_SCHEMA)
    if "cov" not in meta:
        raise ValueError(f"{path}: missing '# cov=' metadata line")
    cov = json.loads(meta["cov"])
    data = np.loadtxt(path, delimiter=",", skiprows=n_header + 1, ndmin=2)
    if data.size == 0:
        raise ValueError(f"{path}: trajectory table has no rows")
    if data.shape[1] != 7:
        raise ValueError(f"{path}: expected columns t,x_T,p_T,x_F,p_F,x_S,p_S")
    return TrajectoryTable(
        times=data[:, 0],
        x_true=data[:, 1:3],
        x_filt=data[:, 3:5],
        x_smooth=data[:, 5:7],
        cov=cov,
    )
