"""Command-line front end and file formats."""

from __future__ import annotations

import json

import numpy as np
import pytest
from scipy import integrate

from tailfield import cli, io, sim
from tailfield.errors import ValidationError


def run(*argv) -> int:
    return cli.main([str(a) for a in argv])


@pytest.fixture()
def sample_csv(tmp_path):
    path = tmp_path / "sample.csv"
    assert run("simulate", "--model", "smith", "--n", 300, "--grid-n", 10, "--seed", 3,
               "--out", path) == 0
    return path


class TestSimulate:
    def test_shape(self, tmp_path) -> None:
        out = tmp_path / "p.csv"
        assert run("simulate", "--model", "pareto", "--n", 500, "--grid-n", 20, "--seed", 7,
                   "--out", out) == 0
        lines = out.read_text().splitlines()
        assert len(lines) == 501
        assert all(len(line.split(",")) == 21 for line in lines)
        meta = json.loads(io.metadata_path(out).read_text())
        assert meta["model"] == "pareto" and meta["seed"] is not None

    def test_byte_identical(self, tmp_path) -> None:
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for path in (a, b):
            run("simulate", "--n", 50, "--grid-n", 6, "--seed", 11, "--out", path)
        assert a.read_bytes() == b.read_bytes()
        assert io.metadata_path(a).read_bytes() == io.metadata_path(b).read_bytes()

    def test_distorted_header(self, tmp_path) -> None:
        out = tmp_path / "d.csv"
        run("simulate", "--n", 10, "--grid-n", 8, "--theta", 1, "--seed", 1, "--out", out)
        header = [float(v) for v in out.read_text().splitlines()[0].split(",")]
        r = np.arange(9) / 8
        np.testing.assert_allclose(header, np.sqrt((2 - r) * r), atol=1e-15)

    def test_env_default(self, tmp_path, monkeypatch) -> None:
        monkeypatch.setenv("TAILFIELD_N", "17")
        out = tmp_path / "e.csv"
        assert run("simulate", "--grid-n", 4, "--out", out) == 0
        assert len(out.read_text().splitlines()) == 18
        assert run("simulate", "--grid-n", 4, "--n", 5, "--out", out) == 0
        assert len(out.read_text().splitlines()) == 6

    def test_usage_error(self, tmp_path) -> None:
        with pytest.raises(SystemExit) as info:
            run("simulate", "--model", "gauss")
        assert info.value.code == 1

    def test_validation_error(self, tmp_path) -> None:
        assert run("simulate", "--theta", 2, "--out", tmp_path / "x.csv") == 1

    def test_unwritable(self, tmp_path) -> None:
        assert run("simulate", "--n", 5, "--out", tmp_path / "missing" / "x.csv") == 3


class TestEstimate:
    def test_outputs(self, sample_csv, tmp_path) -> None:
        out = tmp_path / "est"
        assert run("estimate", "--input", sample_csv, "--k", 30, "--query", "0,3:1,1",
                   "--query", "1,2,5:0.5,1,2", "--out-dir", out) == 0
        header, rows = io.read_csv_table(out / "estimates_pairwise.csv")
        M = np.array(rows)[:, 1:]
        np.testing.assert_array_equal(M, M.T)
        text = (out / "estimates_queries.csv").read_text().splitlines()
        assert text[0] == "t_indices,x,R_hat,l_hat,l_hat_inclusion_exclusion"
        for line in text[1:]:
            *_, l_hat, l_ie = line.split(",")
            assert float(l_hat) == pytest.approx(float(l_ie), abs=1e-12)
        _, drows = io.read_csv_table(out / "estimates_derivatives.csv")
        assert all(0 <= r[3] <= 1 for r in drows)

    def test_round_trip(self, sample_csv, tmp_path) -> None:
        sample = io.read_sample(sample_csv)
        again = tmp_path / "again.csv"
        io.write_sample(again, sample)
        assert io.read_sample(again).values.tobytes() == sample.values.tobytes()
        out = tmp_path / "j"
        assert run("estimate", "--input", sample_csv, "--k", 30, "--format", "json",
                   "--out-dir", out) == 0
        payload = json.loads((out / "estimates.json").read_text())
        assert payload["config"]["k"] == 30
        assert len(payload["pairwise"]) == 11

    def test_malformed(self, tmp_path) -> None:
        bad = tmp_path / "bad.csv"
        bad.write_text("0,0.5,1\n1.0,2.0,3.0\n1.0,abc,3.0\n")
        assert run("estimate", "--input", bad, "--out-dir", tmp_path) == 1
        with pytest.raises(ValidationError, match="row 3, column 2"):
            io.read_sample(bad)

    def test_ragged(self, tmp_path) -> None:
        bad = tmp_path / "ragged.csv"
        bad.write_text("0,0.5,1\n1.0,2.0\n")
        with pytest.raises(ValidationError, match="row 2"):
            io.read_sample(bad)


class TestTest:
    def test_report(self, sample_csv, tmp_path, capsys) -> None:
        out = tmp_path / "report.json"
        assert run("test", "--input", sample_csv, "--k", 30, "--delta", 2, "--out", out) == 0
        report = json.loads(out.read_text())
        for key in ("input", "k", "delta", "mvn_tol", "seed", "eta", "format"):
            assert key in report["config"]
        assert 0 <= report["p_value"] <= 1
        assert len(report["I_hat"]) == 10 - 4 + 1
        assert "p-value" in capsys.readouterr().out

    def test_comonotone(self, tmp_path) -> None:
        col = np.random.default_rng(0).random(200)
        s = sim.FunctionalSample(np.tile(col[:, None], (1, 11)), sim.Grid.uniform(10))
        path = tmp_path / "c.csv"
        io.write_sample(path, s)
        out = tmp_path / "r.json"
        assert run("test", "--input", path, "--k", 20, "--out", out) == 0
        report = json.loads(out.read_text())
        assert report["D"] == 0.0
        assert report["p_value"] == 1.0

    def test_missing_file(self, tmp_path) -> None:
        out = tmp_path / "r.json"
        assert run("test", "--input", tmp_path / "nope.csv", "--out", out) == 3
        assert not out.exists()
        assert list(tmp_path.iterdir()) == []

    def test_degenerate(self, sample_csv, tmp_path) -> None:
        out = tmp_path / "r.json"
        assert run("test", "--input", sample_csv, "--k", 0.5, "--out", out) == 2
        assert "error" in json.loads(out.read_text())

    def test_nonuniform_needs_flag(self, tmp_path) -> None:
        path = tmp_path / "d.csv"
        run("simulate", "--n", 200, "--grid-n", 10, "--theta", 1, "--seed", 2, "--out", path)
        assert run("test", "--input", path, "--k", 20, "--out", tmp_path / "r.json") == 1
        assert run("test", "--input", path, "--k", 20, "--nominal-grid",
                   "--out", tmp_path / "r.json") == 0


class TestTheory:
    @pytest.mark.parametrize("fmt", ["csv", "json"])
    def test_tables(self, tmp_path, fmt) -> None:
        assert run("theory", "--model", "smith", "--grid-n", 8, "--delta", 2, "--format", fmt,
                   "--out-dir", tmp_path) == 0
        if fmt == "csv":
            _, rows = io.read_csv_table(tmp_path / "theory_pairs.csv")
            assert len(rows) == 9 * 8 // 2
            sigma = np.loadtxt(tmp_path / "theory_sigma.csv", delimiter=",")
            assert sigma.shape == (5, 5)
            np.testing.assert_allclose(sigma, sigma.T)
        else:
            payload = json.loads((tmp_path / "theory.json").read_text())
            assert len(payload["Sigma"]) == 5


@pytest.fixture(scope="module")
def mc_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("mc")
    assert run("mc", "--model", "smith", "--thetas", "0,1", "--n", 200, "--k", 20,
               "--grid-n", 10, "--delta", 2, "--reps", 30, "--seed", 5, "--pdf-tol", 1e-3,
               "--out-dir", out) == 0
    return out


class TestMc:
    def test_size_power_table(self, mc_dir) -> None:
        header, rows = io.read_csv_table(mc_dir / "size_power.csv")
        assert header == ["theta", "alpha", "reject_rate", "se"]
        assert len(rows) == 6

    def test_pmf_and_pdf(self, mc_dir) -> None:
        header, rows = io.read_csv_table(mc_dir / "null_pmf.csv")
        assert header == ["value", "pmf", "limit_pdf"]
        t = np.array(rows)
        np.testing.assert_array_equal(t[:, 0], np.arange(len(t)))
        assert t[:, 1].sum() == pytest.approx(1.0, abs=1e-9)
        pdf = t[:, 2]
        assert integrate.trapezoid(pdf, t[:, 0]) == pytest.approx(1.0, abs=0.01)
        mode = int(np.argmax(pdf))
        assert np.all(np.diff(pdf[: mode + 1]) >= -1e-3)
        assert np.all(np.diff(pdf[mode:]) <= 1e-3)

    def test_pp_and_json(self, mc_dir) -> None:
        _, rows = io.read_csv_table(mc_dir / "pvalues_pp.csv")
        assert len(rows) == 30
        payload = json.loads((mc_dir / "experiment.json").read_text())
        assert len(payload["p_values"]["0.0"]) == 30
        assert all(float(v) == int(v) for v in payload["scaled_statistics"]["1.0"])

    def test_figures(self, mc_dir) -> None:
        for name in ("null_distribution.png", "pp_plot.png", "power.png"):
            data = (mc_dir / name).read_bytes()
            assert data[:8] == b"\x89PNG\r\n\x1a\n"

    def test_idempotent(self, mc_dir, tmp_path) -> None:
        assert run("mc", "--model", "smith", "--thetas", "0,1", "--n", 200, "--k", 20,
                   "--grid-n", 10, "--delta", 2, "--reps", 30, "--seed", 5, "--pdf-tol", 1e-3,
                   "--no-plots", "--out-dir", tmp_path) == 0
        for name in ("size_power.csv", "null_pmf.csv", "experiment.json"):
            assert (tmp_path / name).read_bytes() == (mc_dir / name).read_bytes()
        assert not (tmp_path / "power.png").exists()


class TestFormatting:
    @pytest.mark.parametrize("v", [0.1, 1 / 3, 1e-300, 123456789.123456789, -2.5e17])
    def test_full_precision(self, v) -> None:
        assert float(io.fmt(v)) == v

    def test_json_nonfinite(self, tmp_path) -> None:
        io.write_json(tmp_path / "x.json", {"a": np.float64("nan"), "b": np.arange(2)})
        assert json.loads((tmp_path / "x.json").read_text()) == {"a": None, "b": [0, 1]}
