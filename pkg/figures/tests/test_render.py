import numpy as np
import pytest

from plexfig.cli import main
from plexfig.render import FigureSpec, _grid, load_table, render


def write_rate_grid_csv(path, betas=(0.1, 0.5, 0.9), inters=(0.1, 0.5, 0.9)):
    rows = ["beta1,beta2,beta_inter,avg_precision,css95,n_tests,discarded"]
    for bi in inters:
        for b1 in betas:
            for b2 in betas:
                rows.append(f"{b1:g},{b2:g},{bi:g},{(b1 + b2 + bi) / 3:.6f},"
                            f"{int(100 * (1 - b1))},1000,0")
    path.write_text("\n".join(rows) + "\n")


def write_layers_csv(path):
    rows = ["layers,avg_precision,css95,n_tests,discarded"]
    for L, p, c in [(1, 0.30, 94), (2, 0.42, 67), (3, 0.47, 55), (4, 0.50, 48)]:
        rows.append(f"{L},{p:.6f},{c},1000,0")
    path.write_text("\n".join(rows) + "\n")


class TestLoadTable:
    def test_reads_numeric_columns(self, tmp_path):
        f = tmp_path / "r.csv"
        write_layers_csv(f)
        t = load_table(f, ["layers", "avg_precision"])
        assert t["layers"].tolist() == [1, 2, 3, 4]
        assert t["avg_precision"][1] == pytest.approx(0.42)

    def test_missing_columns_named(self, tmp_path):
        f = tmp_path / "r.csv"
        write_layers_csv(f)
        with pytest.raises(ValueError, match="missing columns beta1, rho"):
            load_table(f, ["layers", "beta1", "rho"])

    def test_empty_rows_rejected(self, tmp_path):
        f = tmp_path / "r.csv"
        f.write_text("a,b\n")
        with pytest.raises(ValueError, match="no data rows"):
            load_table(f, ["a"])


class TestGrid:
    def test_axes_sorted_ascending_regardless_of_row_order(self):
        xs = np.array([0.9, 0.1, 0.9, 0.1])
        ys = np.array([0.5, 0.5, 0.2, 0.2])
        vals = np.array([4.0, 3.0, 2.0, 1.0])
        ux, uy, mat = _grid(xs, ys, vals, "t")
        assert ux.tolist() == [0.1, 0.9]
        assert uy.tolist() == [0.2, 0.5]
        # mat[row=y, col=x] follows the sorted axes
        assert mat.tolist() == [[1.0, 2.0], [3.0, 4.0]]

    def test_incomplete_grid_rejected(self):
        with pytest.raises(ValueError, match="incomplete grid"):
            _grid(np.array([0.1, 0.9, 0.1]), np.array([0.2, 0.2, 0.5]),
                  np.zeros(3), "t")

    def test_duplicate_cell_rejected(self):
        with pytest.raises(ValueError, match="duplicate cell"):
            _grid(np.array([0.1, 0.1]), np.array([0.2, 0.2]), np.zeros(2), "t")


class TestFigureSpec:
    def test_heatmap_requires_y(self):
        with pytest.raises(ValueError, match="--y"):
            FigureSpec(csv_path="r.csv", kind="heatmap", x="beta1",
                       value="avg_precision", out_path="f.png")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown kind"):
            FigureSpec(csv_path="r.csv", kind="scatter", x="a", value="b",
                       out_path="f.png")


def png_bytes(path):
    data = path.read_bytes()
    assert data[:8] == b"\x89PNG\r\n\x1a\n"
    return data


class TestRender:
    def test_three_facet_heatmap(self, tmp_path):
        f, out = tmp_path / "r.csv", tmp_path / "fig.png"
        write_rate_grid_csv(f)
        render(FigureSpec(csv_path=str(f), kind="heatmap", x="beta1",
                          y="beta2", value="avg_precision", facet="beta_inter",
                          out_path=str(out)))
        assert png_bytes(out)

    def test_single_cell_heatmap(self, tmp_path):
        f, out = tmp_path / "r.csv", tmp_path / "fig.png"
        f.write_text("beta1,beta2,beta_inter,avg_precision\n0.5,0.5,0.1,0.4\n")
        render(FigureSpec(csv_path=str(f), kind="heatmap", x="beta1",
                          y="beta2", value="avg_precision", out_path=str(out)))
        assert png_bytes(out)

    def test_four_point_line_plot(self, tmp_path):
        f, out = tmp_path / "r.csv", tmp_path / "fig.png"
        write_layers_csv(f)
        render(FigureSpec(csv_path=str(f), kind="lines", x="layers",
                          value="css95", out_path=str(out)))
        assert png_bytes(out)

    def test_faceted_lines_one_series_per_facet(self, tmp_path):
        f, out = tmp_path / "r.csv", tmp_path / "fig.png"
        rows = ["rho1,beta_inter,avg_precision"]
        for bi in (0.1, 0.9):
            for r1 in (0.02, 0.1, 0.2):
                rows.append(f"{r1:g},{bi:g},{r1 * bi:.4f}")
        f.write_text("\n".join(rows) + "\n")
        render(FigureSpec(csv_path=str(f), kind="lines", x="rho1",
                          value="avg_precision", facet="beta_inter",
                          out_path=str(out)))
        assert png_bytes(out)

    def test_deterministic_and_input_untouched(self, tmp_path):
        f = tmp_path / "r.csv"
        write_layers_csv(f)
        before = f.read_bytes()
        outs = [tmp_path / "a.png", tmp_path / "b.png"]
        for out in outs:
            render(FigureSpec(csv_path=str(f), kind="lines", x="layers",
                              value="avg_precision", out_path=str(out)))
        assert png_bytes(outs[0]) == png_bytes(outs[1])
        assert f.read_bytes() == before

    def test_incomplete_heatmap_grid_rejected(self, tmp_path):
        f, out = tmp_path / "r.csv", tmp_path / "fig.png"
        f.write_text("beta1,beta2,avg_precision\n"
                     "0.1,0.1,0.5\n0.9,0.1,0.5\n0.1,0.9,0.5\n")
        with pytest.raises(ValueError, match="incomplete grid"):
            render(FigureSpec(csv_path=str(f), kind="heatmap", x="beta1",
                              y="beta2", value="avg_precision",
                              out_path=str(out)))
        assert not out.exists()


class TestCli:
    def test_heatmap_end_to_end(self, tmp_path):
        f, out = tmp_path / "r.csv", tmp_path / "fig.png"
        write_rate_grid_csv(f)
        rc = main(["--csv", str(f), "--kind", "heatmap", "--x", "beta1",
                   "--y", "beta2", "--value", "avg_precision",
                   "--facet", "beta_inter", "--out", str(out)])
        assert rc == 0
        assert png_bytes(out)

    def test_missing_column_exit_code_and_message(self, tmp_path, capsys):
        f, out = tmp_path / "r.csv", tmp_path / "fig.png"
        write_layers_csv(f)
        rc = main(["--csv", str(f), "--kind", "lines", "--x", "layers",
                   "--value", "nonexistent", "--out", str(out)])
        assert rc == 1
        assert "nonexistent" in capsys.readouterr().err

    def test_absent_csv_exit_code(self, tmp_path, capsys):
        rc = main(["--csv", str(tmp_path / "none.csv"), "--kind", "lines",
                   "--x", "layers", "--value", "css95",
                   "--out", str(tmp_path / "f.png")])
        assert rc == 1
        assert "error:" in capsys.readouterr().err
