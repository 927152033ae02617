"""Acceptance for the figure package: every kind renders from the
golden CSVs, outputs are deterministic, and schema-mismatched or empty
inputs are refused."""

from pathlib import Path

import numpy as np
import pytest

from opo_figures import FigureSpec, SchemaError, load_sweep, load_trajectory, render
from opo_figures.cli import main as cli_main

DATA = Path(__file__).parent / "data"

GOLDEN = {
    "eta-curves": DATA / "eta_sweep.csv",
    "angle-heatmap": DATA / "angle_grid.csv",
    "optimal-cut": DATA / "angle_grid.csv",
    "phase-space": DATA / "trajectory.csv",
}


class TestRenderKinds:
    @pytest.mark.parametrize("kind", sorted(GOLDEN))
    def test_renders_png(self, kind, tmp_path):
        out = tmp_path / f"{kind}.png"
        result = render(FigureSpec(kind=kind, csv_path=GOLDEN[kind], output_path=out))
        assert result == out
        assert out.stat().st_size > 10_000

    def test_true_squeeze_heatmap(self, tmp_path):
        out = tmp_path / "truesq.png"
        render(FigureSpec(
            kind="angle-heatmap", csv_path=DATA / "true_squeeze.csv", output_path=out,
        ))
        assert out.exists()

    def test_svg_output(self, tmp_path):
        out = tmp_path / "curves.svg"
        render(FigureSpec(kind="eta-curves", csv_path=GOLDEN["eta-curves"], output_path=out))
        assert out.read_text().startswith("<?xml")

    def test_deterministic_bytes(self, tmp_path):
        outs = []
        for name in ("a.png", "b.png"):
            out = tmp_path / name
            render(FigureSpec(
                kind="angle-heatmap", csv_path=GOLDEN["angle-heatmap"], output_path=out,
            ))
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_cli(self, tmp_path, capsys):
        out = tmp_path / "cli.png"
        assert cli_main([
            "--kind", "phase-space", "--csv", str(GOLDEN["phase-space"]),
            "--out", str(out),
        ]) == 0
        assert out.exists()


class TestRefusals:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown figure kind"):
            FigureSpec(kind="pie-chart", csv_path="x.csv", output_path="x.png")

    def test_schema_mismatch(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("# schema=other-tool/sweep v7\n# kind=angles\na,b\n1,2\n")
        with pytest.raises(SchemaError, match="schema"):
            render(FigureSpec(kind="eta-curves", csv_path=bad, output_path=tmp_path / "x.png"))

    def test_schema_mismatch_in_sidecar(self, tmp_path):
        csv_text = (DATA / "eta_sweep.csv").read_text()
        csv = tmp_path / "eta.csv"
        csv.write_text(csv_text)
        (tmp_path / "eta.json").write_text('{"schema": "other/sweep v2", "optimal": {}}')
        with pytest.raises(SchemaError):
            load_sweep(csv)

    def test_empty_grid(self, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("# schema=opo-smoothing/sweep v1\n# kind=angles\ntheta_a_deg,theta_b_deg\n")
        with pytest.raises(ValueError, match="no rows"):
            render(FigureSpec(kind="angle-heatmap", csv_path=empty, output_path=tmp_path / "x.png"))

    def test_missing_columns(self, tmp_path):
        partial = tmp_path / "partial.csv"
        partial.write_text(
            "# schema=opo-smoothing/sweep v1\n# kind=eta\neta_a,purity_t\n0.4,0.9\n"
        )
        with pytest.raises(ValueError, match="missing columns"):
            render(FigureSpec(kind="eta-curves", csv_path=partial, output_path=tmp_path / "x.png"))

    def test_heatmap_requires_sidecar_curves(self, tmp_path):
        text = (DATA / "angle_grid.csv").read_text()
        orphan = tmp_path / "orphan.csv"
        orphan.write_text(text)
        with pytest.raises(ValueError, match="sidecar"):
            render(FigureSpec(kind="angle-heatmap", csv_path=orphan, output_path=tmp_path / "x.png"))


class TestLoaders:
    def test_sweep_loader_shapes(self):
        table = load_sweep(GOLDEN["angle-heatmap"])
        assert table.kind == "angles"
        assert table.n_rows == 37 * 37
        assert set(table.optimal) >= {"recovery_p", "recovery_s"}
        assert table.provenance["seed"] == 0

    def test_trajectory_loader(self):
        table = load_trajectory(GOLDEN["phase-space"])
        assert table.x_smooth.shape == (len(table.times), 2)
        v_unc = np.asarray(table.cov["v_unc"])
        assert v_unc.shape == (2, 2)
        assert table.valid_slice().any()
