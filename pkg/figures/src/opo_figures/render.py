"""Render the four figure kinds from sweep / trajectory files.

All physics numbers are read from the input files; the only math done
here is axis transforms (the documented dB form) and drawing covariance
ellipses from matrices carried in the file metadata.  Outputs are
deterministic for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from matplotlib import cm
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .io import SweepTable, load_sweep, load_trajectory

__all__ = ["FigureSpec", "render"]

KINDS = ("eta-curves", "angle-heatmap", "optimal-cut", "phase-space")

_SERIES = (
    ("t", "true", "tab:green"),
    ("s", "smoothed", "tab:blue"),
    ("f", "filtered", "tab:orange"),
)


@dataclass(frozen=True)
class FigureSpec:
    """One figure job: input file(s), kind, output image path."""

    kind: str
    csv_path: str | Path
    output_path: str | Path
    sidecar_path: str | Path | None = None
    dpi: int = 150
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")


def render(spec: FigureSpec) -> Path:
    """Render ``spec`` and return the written path."""
    out = Path(spec.output_path)
    renderer = {
        "eta-curves": _render_eta_curves,
        "angle-heatmap": _render_angle_heatmap,
        "optimal-cut": _render_optimal_cut,
        "phase-space": _render_phase_space,
    }[spec.kind]
    fig = renderer(spec)
    if spec.title:
        fig.suptitle(spec.title)
    _save(fig, out, spec.dpi)
    return out


def _save(fig: Figure, out: Path, dpi: int) -> None:
    FigureCanvasAgg(fig)
    metadata = {"Date": None} if out.suffix == ".svg" else None
    fig.savefig(out, dpi=dpi, metadata=metadata)


def _figure(width: float, height: float) -> Figure:
    return Figure(figsize=(width, height), layout="constrained")


# --- efficiency curves (four-panel) ------------------------------------------


def _render_eta_curves(spec: FigureSpec) -> Figure:
    table = load_sweep(spec.csv_path, spec.sidecar_path)
    table.require(
        "eta_a", "purity_t", "purity_f", "purity_s", "purity_unc",
        "trsd_f", "trsd_s", "squeeze_db_t", "squeeze_db_f", "squeeze_db_s",
        "squeeze_db_unc", "antisqueeze_db_t", "antisqueeze_db_f",
        "antisqueeze_db_s", "antisqueeze_db_unc",
    )
    c = table.columns
    order = np.argsort(c["eta_a"])
    eta = c["eta_a"][order]

    fig = _figure(9.0, 7.0)
    axes = fig.subplots(2, 2)
    panels = (
        ("purity", "purity_{}", axes[0, 0], True),
        ("average TrSD from true state", "trsd_{}", axes[0, 1], False),
        ("squeezed quadrature [dB]", "squeeze_db_{}", axes[1, 0], True),
        ("anti-squeezed quadrature [dB]", "antisqueeze_db_{}", axes[1, 1], True),
    )
    for label, pattern, ax, with_true in panels:
        for tag, name, color in _SERIES:
            if tag == "t" and not with_true:
                continue
            key = pattern.format(tag)
            ax.plot(eta, c[key][order], color=color, label=name)
            mc_key = f"mc_{key}"
            if mc_key in c:
                err = c.get(f"mc_stderr_{key}")
                ax.errorbar(
                    eta, c[mc_key][order],
                    yerr=None if err is None else err[order],
                    fmt="o", color=color, markersize=3, capsize=2,
                )
        unc_key = pattern.format("unc")
        if unc_key in c:
            ax.plot(eta, c[unc_key][order], color="0.5", ls="--", label="unconditional")
        ax.set_xlabel(r"$\eta_A$")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    axes[0, 0].legend(fontsize=8)
    return fig


# --- angle-grid heatmaps ------------------------------------------------------


def _grid_axes(table: SweepTable) -> tuple[np.ndarray, np.ndarray]:
    tha = np.unique(table.columns["theta_a_deg"])
    thb = np.unique(table.columns["theta_b_deg"])
    if len(tha) * len(thb) != table.n_rows:
        raise ValueError("angle table is not a complete rectangular grid")
    return tha, thb


def _as_grid(table: SweepTable, name: str, shape: tuple[int, int]) -> np.ndarray:
    return table.columns[name].reshape(shape)


_RECOVERY_PANELS = (
    ("recovery_p", "purity recovery"),
    ("recovery_d", "TrSD recovery"),
    ("recovery_s", "squeezing recovery"),
    ("recovery_a", "anti-squeezing recovery"),
)


def _render_angle_heatmap(spec: FigureSpec) -> Figure:
    table = load_sweep(spec.csv_path, spec.sidecar_path)
    tha, thb = _grid_axes(table)
    shape = (len(tha), len(thb))
    extent = (thb[0], thb[-1], tha[0], tha[-1])

    if table.kind == "true-squeeze":
        table.require("squeeze_db_t", "antisqueeze_db_t")
        fig = _figure(9.0, 4.0)
        axes = fig.subplots(1, 2)
        panels = (
            ("squeeze_db_t", "true-state squeezing [dB]"),
            ("antisqueeze_db_t", "true-state anti-squeezing [dB]"),
        )
        for (name, label), ax in zip(panels, axes.ravel()):
            img = ax.imshow(
                _as_grid(table, name, shape), origin="lower", extent=extent,
                aspect="equal", cmap=cm.viridis,
            )
            fig.colorbar(img, ax=ax, shrink=0.85)
            ax.set_xlabel(r"$\theta_B$ [deg]")
            ax.set_ylabel(r"$\theta_A$ [deg]")
            ax.set_title(label, fontsize=10)
        return fig

    table.require(*(name for name, _ in _RECOVERY_PANELS))
    if not table.optimal:
        raise ValueError(
            "angle-heatmap needs the optimal-angle curves from the JSON sidecar"
        )
    fig = _figure(9.0, 8.0)
    axes = fig.subplots(2, 2)
    for (name, label), ax in zip(_RECOVERY_PANELS, axes.ravel()):
        img = ax.imshow(
            _as_grid(table, name, shape), origin="lower", extent=extent,
            aspect="equal", cmap=cm.magma,
        )
        fig.colorbar(img, ax=ax, shrink=0.85)
        curve = table.optimal.get(name)
        if curve is None:
            raise ValueError(f"sidecar has no optimal curve for {name}")
        ax.plot(curve["theta_b_opt_deg"], curve["theta_a_deg"], color="0.8", lw=1.0)
        ax.set_xlabel(r"$\theta_B$ [deg]")
        ax.set_ylabel(r"$\theta_A$ [deg]")
        ax.set_title(label, fontsize=10)
    return fig


# --- metrics along the optimal-angle cut --------------------------------------


def _rows_along_curve(table: SweepTable, curve: dict) -> np.ndarray:
    """Row indices of the grid cells the optimal curve passes through."""
    key = {}
    for i in range(table.n_rows):
        key[(round(table.columns["theta_a_deg"][i], 6),
             round(table.columns["theta_b_deg"][i], 6))] = i
    rows = []
    for a, b in zip(curve["theta_a_deg"], curve["theta_b_opt_deg"]):
        try:
            rows.append(key[(round(a, 6), round(b, 6))])
        except KeyError:
            raise ValueError(
                f"optimal-curve point ({a}, {b}) deg is not a grid cell of the CSV"
            ) from None
    return np.asarray(rows)


_CUT_PANELS = (
    ("purity_{}", "purity", "recovery_p", True),
    ("trsd_{}", "average TrSD", "recovery_p", False),
    ("squeeze_db_{}", "squeezed quadrature [dB]", "recovery_s", True),
    ("antisqueeze_db_{}", "anti-squeezed quadrature [dB]", "recovery_a", True),
)


def _render_optimal_cut(spec: FigureSpec) -> Figure:
    table = load_sweep(spec.csv_path, spec.sidecar_path)
    if not table.optimal:
        raise ValueError("optimal-cut needs the JSON sidecar with the optimal curves")
    fig = _figure(9.0, 7.0)
    axes = fig.subplots(2, 2)
    for (pattern, label, curve_name, with_true), ax in zip(_CUT_PANELS, axes.ravel()):
        curve = table.optimal.get(curve_name)
        if curve is None:
            raise ValueError(f"sidecar has no optimal curve for {curve_name}")
        rows = _rows_along_curve(table, curve)
        theta_a = np.asarray(curve["theta_a_deg"])
        for tag, name, color in _SERIES:
            if tag == "t" and not with_true:
                continue
            key = pattern.format(tag)
            table.require(key)
            ax.plot(theta_a, table.columns[key][rows], color=color, label=name)
        ax.set_xlabel(r"$\theta_A$ [deg]")
        ax.set_ylabel(label)
        ax.grid(alpha=0.3)
    axes[0, 0].legend(fontsize=8)
    return fig


# --- phase-space portrait ------------------------------------------------------


def _ellipse(ax, cov: np.ndarray, n_sigma: float, **kwargs) -> None:
    eigvals, eigvecs = np.linalg.eigh(cov)
    phi = np.linspace(0.0, 2.0 * np.pi, 256)
    circle = np.stack([np.cos(phi), np.sin(phi)])
    pts = eigvecs @ (n_sigma * np.sqrt(np.maximum(eigvals, 0.0))[:, None] * circle)
    ax.plot(pts[0], pts[1], **kwargs)


def _render_phase_space(spec: FigureSpec) -> Figure:
    table = load_trajectory(spec.csv_path)
    mask = table.valid_slice()
    fig = _figure(5.5, 5.5)
    ax = fig.subplots()
    ax.plot(
        table.x_true[mask, 0], table.x_true[mask, 1],
        color="0.75", lw=0.4, label="true mean",
    )
    ax.plot(
        table.x_smooth[mask, 0], table.x_smooth[mask, 1],
        color="tab:blue", lw=0.6, label="smoothed mean",
    )
    v_unc = np.asarray(table.cov["v_unc"], dtype=float)
    v_smooth = np.asarray(table.cov["v_smooth"], dtype=float)
    # contours of the theoretical mean distribution, covariance V_unc - V_S,
    # at exp(-1/2) (one sigma) and exp(-9/2) (three sigma) of the peak
    spread = v_unc - v_smooth
    _ellipse(ax, spread, 1.0, color="magenta", lw=1.5, label=r"$e^{-1/2}$ contour")
    _ellipse(ax, spread, 3.0, color="magenta", lw=1.5, ls="--", label=r"$e^{-9/2}$ contour")
    ax.set_xlabel(r"$\langle x \rangle$")
    ax.set_ylabel(r"$\langle p \rangle$")
    ax.set_aspect("equal")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8, loc="upper right")
    return fig
