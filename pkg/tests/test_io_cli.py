import json
import os

import numpy as np
import pytest
from numpy.testing import assert_array_equal

import egarchfit as eg
from egarchfit import dataio
from egarchfit.cli import main


class TestLoadSeries:
    def test_two_row_parse(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,x\n1,0.5\n2,-0.3\n")
        series = dataio.load_series(str(path))
        assert_array_equal(series.returns, np.array([0.5, -0.3]))

    def test_headerless_single_column(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("0.1\n-0.2\n0.3\n")
        series = dataio.load_series(str(path))
        assert len(series) == 3

    def test_nan_names_row(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,x\n1,0.5\n2,NaN\n3,0.1\n")
        with pytest.raises(eg.NonFiniteValueError, match="row 3"):
            dataio.load_series(str(path))

    def test_parse_error_names_location(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,x\n1,0.5\n2,oops\n")
        with pytest.raises(eg.ParseError, match="row 3"):
            dataio.load_series(str(path))

    def test_too_short(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,x\n1,0.5\n")
        with pytest.raises(eg.TooShortError):
            dataio.load_series(str(path), min_rows=10)

    def test_named_column(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,ret,vol\n1,0.5,1.0\n2,-0.3,1.1\n")
        series = dataio.load_series(str(path), column="ret")
        assert_array_equal(series.returns, np.array([0.5, -0.3]))
        with pytest.raises(eg.ParseError, match="no column"):
            dataio.load_series(str(path), column="missing")

    def test_ambiguous_columns_need_name(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("t,a,b\n1,0.5,1.0\n")
        with pytest.raises(eg.ParseError, match="ambiguous"):
            dataio.load_series(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(eg.ParseError):
            dataio.load_series(str(tmp_path / "nope.csv"))


class TestRoundTrips:
    def test_series_round_trip_lossless(self, tmp_path, theta_star):
        sample = eg.simulate(theta_star, eg.InnovationSpec(), n=500, seed=80)
        path = tmp_path / "sim.csv"
        dataio.save_series(str(path), sample)
        back = dataio.load_series(str(path))
        assert_array_equal(back.returns, sample.returns)
        assert_array_equal(back.latent_log_var, sample.latent_log_var)
        assert_array_equal(back.innovations, sample.innovations)

    def test_params_round_trip(self, tmp_path):
        p = eg.ModelParams(0.1, -0.25, 1 / 3, 0.7)
        path = tmp_path / "p.json"
        dataio.save_params(str(path), p)
        assert dataio.load_params(str(path)) == p

    def test_params_from_fit_json(self, tmp_path, theta_star):
        sample = eg.simulate(theta_star, eg.InnovationSpec(), n=1000, seed=81)
        res = eg.fit(sample, theta0=theta_star)
        path = tmp_path / "fit.json"
        dataio.write_json(str(path), res.to_dict())
        assert dataio.load_params(str(path)) == res.theta_hat

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        path = tmp_path / "out.txt"
        dataio.atomic_write_text(str(path), "hello\n")
        assert path.read_text() == "hello\n"
        assert [f.name for f in tmp_path.iterdir()] == ["out.txt"]


class TestCli:
    def _simulate(self, tmp_path, seed=7):
        out = tmp_path / "s.csv"
        code = main([
            "simulate", "--alpha", "0", "--beta", "0.5", "--gamma", "-0.1",
            "--delta", "0.3", "--n", "2000", "--seed", str(seed), "--out", str(out),
        ])
        assert code == 0
        return out

    def test_simulate_columns(self, tmp_path):
        out = self._simulate(tmp_path)
        header = out.read_text().splitlines()[0]
        assert header == "t,x,log_sigma2,z"

    def test_simulate_byte_identical_rerun(self, tmp_path):
        a = self._simulate(tmp_path)
        data = a.read_bytes()
        b = tmp_path / "s2.csv"
        main([
            "simulate", "--alpha", "0", "--beta", "0.5", "--gamma", "-0.1",
            "--delta", "0.3", "--n", "2000", "--seed", "7", "--out", str(b),
        ])
        assert b.read_bytes() == data

    def test_fit_end_to_end(self, tmp_path, capsys):
        series = self._simulate(tmp_path)
        out = tmp_path / "fit.json"
        code = main([
            "fit", "--input", str(series), "--mode", "sqmle", "--epsilon", "1e-4",
            "--seed", "7", "--out", str(out),
        ])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["mode"] == "sqmle"
        assert payload["converged"] is True
        assert payload["seed"] == 7
        assert "theta_hat" in capsys.readouterr().out

    def test_fit_byte_identical_rerun(self, tmp_path):
        series = self._simulate(tmp_path)
        out1, out2 = tmp_path / "f1.json", tmp_path / "f2.json"
        args = ["fit", "--input", str(series), "--seed", "7"]
        main(args + ["--out", str(out1)])
        main(args + ["--out", str(out2)])
        assert out1.read_bytes() == out2.read_bytes()

    def test_check_invertibility_gate(self, tmp_path, capsys):
        series = self._simulate(tmp_path)
        fit_json = tmp_path / "fit.json"
        main(["fit", "--input", str(series), "--seed", "7", "--out", str(fit_json)])
        code = main([
            "check-invertibility", "--params", str(fit_json),
            "--method", "empirical", "--input", str(series),
        ])
        assert code == 0
        assert "verdict: invertible" in capsys.readouterr().out
        # chaotic params gate to exit 1
        bad = tmp_path / "bad.json"
        dataio.save_params(str(bad), eg.ModelParams(0.0, 0.2, 0.0, 6.0))
        code = main([
            "check-invertibility", "--params", str(bad),
            "--method", "theoretical", "--mc-paths", "2000", "--seed", "3",
        ])
        assert code == 1

    def test_stability_csv(self, tmp_path):
        series = self._simulate(tmp_path)
        params = tmp_path / "p.json"
        dataio.save_params(str(params), eg.ModelParams(0.0, 0.5, -0.1, 0.3))
        out = tmp_path / "stab.csv"
        code = main([
            "stability", "--params", str(params), "--input", str(series),
            "--initial-values", "0,5", "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,diff_max,criterion"
        assert len(lines) == 2001

    def test_domain_map_csv(self, tmp_path):
        out = tmp_path / "grid.csv"
        code = main([
            "domain-map", "--gamma-min", "0", "--gamma-max", "0.4",
            "--delta-min", "0", "--delta-max", "0.8", "--grid-size", "2",
            "--beta-tolerance", "1e-2", "--mc-paths", "300", "--seed", "5",
            "--out", str(out),
        ])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "gamma,delta,beta_max"
        assert len(lines) >= 4  # inadmissible cells omitted

    def test_forecast_command(self, tmp_path, capsys):
        series = self._simulate(tmp_path)
        params = tmp_path / "p.json"
        dataio.save_params(str(params), eg.ModelParams(0.0, 0.5, -0.1, 0.3))
        code = main(["forecast", "--params", str(params), "--input", str(series)])
        assert code == 0
        assert "sigma2_next" in capsys.readouterr().out

    def test_mc_study_command(self, tmp_path):
        out = tmp_path / "study.json"
        std_csv = tmp_path / "std.csv"
        code = main([
            "mc-study", "--kind", "normality", "--alpha", "0", "--beta", "0.5",
            "--gamma", "-0.1", "--delta", "0.3", "--n-grid", "300",
            "--replications", "3", "--seed", "11", "--threads", "1",
            "--out", str(out), "--std-csv", str(std_csv),
        ])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["replications"] == 3
        assert std_csv.read_text().splitlines()[0] == "n,rep,coord,standardized"

    def test_usage_error_exit_2(self, tmp_path, capsys):
        series = self._simulate(tmp_path)
        code = main([
            "fit", "--input", str(series), "--column", "nope", "--seed", "1",
            "--out", str(tmp_path / "f.json"),
        ])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_inadmissible_message_names_condition(self, tmp_path, capsys):
        series = self._simulate(tmp_path)
        code = main([
            "fit", "--input", str(series), "--init-gamma", "0.5", "--init-delta", "0.1",
            "--seed", "1", "--out", str(tmp_path / "f.json"),
        ])
        assert code == 2
        assert "INV" in capsys.readouterr().err

    def test_domain_error_exit_1(self, tmp_path):
        # simulate overflow: unconditional mean beyond the guard
        code = main([
            "simulate", "--alpha", "8", "--beta", "0.99", "--gamma", "0",
            "--delta", "0.1", "--n", "10", "--seed", "1",
            "--out", str(tmp_path / "s.csv"),
        ])
        assert code == 1
