"""Renderer tests driven entirely by synthetic CSV/JSON fixtures: the file
formats are the contract, so no numerical module is imported here."""

import json
import math

import numpy as np
import pytest

from wavemaps import plots


def write_path_csv(path, n=200, seed=0):
    rng = np.random.default_rng(seed)
    x = np.linspace(-math.pi, math.pi, n)
    raw = np.cumsum(rng.standard_normal((3, n)), axis=1)
    raw += np.array([0.0, 0.0, 5.0])[:, None]
    B = raw / np.linalg.norm(raw, axis=0)
    V = rng.standard_normal((3, n))
    header = "x,B1,B2,B3,V1,V2,V3"
    rows = np.column_stack([x, B.T, V.T])
    path.write_text(header + "\n" + "\n".join(
        ",".join("%.17g" % v for v in row) for row in rows) + "\n")


def write_convergence_csv(path, n_rows=5):
    lines = ["eps,d_c0cs,d_c1cs1,data_diff"]
    for i in range(n_rows):
        eps = 2.0 ** -(4 + i)
        lines.append(f"{eps},{0.5 * 0.8**i},{1.2 * 0.8**i},{0.8 * 0.9**i}")
    path.write_text("\n".join(lines) + "\n")


def write_divergence_csv(path, n_rows=5):
    lines = ["kappa,J,predicted,residual,psi1_norm,psi2_norm"]
    for i in range(n_rows):
        lines.append(f"{5 + i},{0.61 * (i + 1) + 0.01},{0.61 * (i + 1)},"
                     f"0.01,1.4,1.41")
    path.write_text("\n".join(lines) + "\n")


def write_hhl_csv(path):
    lines = ["sign1,sign2,m,n,M,N,t,norm"]
    for k, M in enumerate((16, 32, 64, 128)):
        for j, N in enumerate((16, 32, 64, 128)):
            lines.append(f"1,-1,0,0,{M},{N},0,{1.5 * 0.9**k * 0.95**j}")
    path.write_text("\n".join(lines) + "\n")


class TestReadTable:
    def test_missing_column(self, tmp_path):
        f = tmp_path / "bad.csv"
        f.write_text("x,B1,B2\n0,0,1\n")
        with pytest.raises(plots.SchemaError, match="missing columns"):
            plots.read_table(str(f), ("x", "B1", "B2", "B3"))

    def test_empty_file(self, tmp_path):
        f = tmp_path / "empty.csv"
        f.write_text("")
        with pytest.raises(plots.SchemaError, match="empty"):
            plots.read_table(str(f), ("x",))

    def test_header_only(self, tmp_path):
        f = tmp_path / "headeronly.csv"
        f.write_text("eps,d_c0cs,d_c1cs1,data_diff\n")
        with pytest.raises(plots.SchemaError, match="no data rows"):
            plots.read_table(str(f), ("eps",))

    def test_round_trip(self, tmp_path):
        f = tmp_path / "t.csv"
        f.write_text("a,b\n1,2\n3,4\n")
        table = plots.read_table(str(f), ("a", "b"))
        assert np.array_equal(table["a"], [1.0, 3.0])
        assert np.array_equal(table["b"], [2.0, 4.0])


class TestRenderers:
    def test_all_kinds_render(self, tmp_path):
        path_csv = tmp_path / "path.csv"
        write_path_csv(path_csv)
        conv_csv = tmp_path / "conv.csv"
        write_convergence_csv(conv_csv)
        div_csv = tmp_path / "div.csv"
        write_divergence_csv(div_csv)
        hhl_csv = tmp_path / "hhl.csv"
        write_hhl_csv(hhl_csv)
        meta = tmp_path / "meta.json"
        meta.write_text(json.dumps(
            {"slope": -0.2, "r_squared": 0.999,
             "summary": {"slope_c0cs": -0.1}}))
        for kind, csv in (("path3d", path_csv), ("convergence", conv_csv),
                          ("divergence", div_csv), ("hhl_heatmap", hhl_csv)):
            out = tmp_path / f"{kind}.png"
            rc = plots.main([kind, "--in", str(csv), "--meta", str(meta),
                             "--out", str(out)])
            assert rc == 0
            assert out.stat().st_size > 0

    def test_two_panel_path_figure_is_wider(self, tmp_path):
        from PIL import Image

        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        write_path_csv(a, seed=0)
        write_path_csv(b, seed=1)
        one = tmp_path / "one.png"
        two = tmp_path / "two.png"
        assert plots.main(["path3d", "--in", str(a), "--out", str(one)]) == 0
        assert plots.main(["path3d", "--in", str(a), "--in", str(b),
                           "--out", str(two)]) == 0
        assert Image.open(two).size[0] == 2 * Image.open(one).size[0]

    def test_deterministic_bytes(self, tmp_path):
        csv = tmp_path / "conv.csv"
        write_convergence_csv(csv)
        outs = []
        for name in ("r1.png", "r2.png"):
            out = tmp_path / name
            assert plots.main(["convergence", "--in", str(csv),
                               "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_inputs_unmodified(self, tmp_path):
        csv = tmp_path / "div.csv"
        write_divergence_csv(csv)
        before = csv.read_bytes()
        assert plots.main(["divergence", "--in", str(csv),
                           "--out", str(tmp_path / "d.png")]) == 0
        assert csv.read_bytes() == before

    def test_single_row_scatter_with_warning(self, tmp_path):
        csv = tmp_path / "conv1.csv"
        write_convergence_csv(csv, n_rows=1)
        out = tmp_path / "single.png"
        with pytest.warns(UserWarning, match="single data row"):
            plots.render_convergence([str(csv)], str(out), {})
        assert out.stat().st_size > 0

    def test_empty_csv_errors_without_output(self, tmp_path, capsys):
        csv = tmp_path / "empty.csv"
        csv.write_text("")
        out = tmp_path / "never.png"
        rc = plots.main(["path3d", "--in", str(csv), "--out", str(out)])
        assert rc == 1
        assert not out.exists()
        assert "plots error" in capsys.readouterr().err

    def test_schema_mismatch_errors(self, tmp_path):
        csv = tmp_path / "wrong.csv"
        write_convergence_csv(csv)
        rc = plots.main(["divergence", "--in", str(csv),
                         "--out", str(tmp_path / "w.png")])
        assert rc == 1

    def test_missing_meta_file(self, tmp_path):
        csv = tmp_path / "conv.csv"
        write_convergence_csv(csv)
        rc = plots.main(["convergence", "--in", str(csv),
                         "--meta", str(tmp_path / "nope.json"),
                         "--out", str(tmp_path / "m.png")])
        assert rc == 1
