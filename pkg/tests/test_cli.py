import csv
import json

import numpy as np
import pytest

from cevm import cli
from cevm.cli import ConfigError, parse_range


class TestParseRange:
    @pytest.mark.parametrize("desc, expected", [
        ("1:100:3:log", [1.0, 10.0, 100.0]),
        ("0:1:3:lin", [0.0, 0.5, 1.0]),
        ("1,2.5, 4", [1.0, 2.5, 4.0]),
        (7, [7.0]),
        ([1, 2], [1.0, 2.0]),
    ])
    def test_forms(self, desc, expected):
        np.testing.assert_allclose(parse_range(desc), expected)

    @pytest.mark.parametrize("desc", ["0:1:3:log", "1:2:0:lin", "1:2:3:cubic", "a,b", [], {"x": 1},
                                      "1,inf"])
    def test_errors_name_the_field(self, desc):
        with pytest.raises(ConfigError, match="^config.x"):
            parse_range(desc, "config.x")


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestCommands:
    def test_mu_grid(self, tmp_path, capsys):
        code = cli.main(["mu", "--example", "exponential", "--x", "1,2,3", "--y", "1,2,3",
                         "--out-dir", str(tmp_path)])
        assert code == 0
        rows = read_csv(tmp_path / "mu_grid.csv")
        assert len(rows) == 9
        r = rows[0]
        assert float(r["mu"]) == pytest.approx(np.exp(-1.0))
        side = json.loads((tmp_path / "mu_grid.json").read_text())
        assert side["measure"]["regime"] == "standard"

    def test_mu_from_config_measure(self, tmp_path):
        cfg = {"model": {"measure": {"regime": "general", "G": {"family": "normal"},
                                     "rho": 0.5, "k": 1.0}},
               "x": [0.0], "y": [1.0], "out_dir": str(tmp_path)}
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        assert cli.main(["mu", "--config", str(tmp_path / "c.json"), "--quiet"]) == 0
        assert len(read_csv(tmp_path / "mu_grid.csv")) == 1

    def test_simulate_is_seeded(self, tmp_path):
        for d in ("a", "b"):
            cli.main(["simulate", "--example", "pareto", "-n", "1000", "--seed", "4",
                      "--out-dir", str(tmp_path / d), "--quiet"])
        assert (tmp_path / "a" / "sample.csv").read_text() == (tmp_path / "b" / "sample.csv").read_text()

    def test_verify_pass_and_asymptotic_independence(self, tmp_path):
        assert cli.main(["verify", "--example", "exponential", "-n", "1000000", "--t", "100",
                         "--out-dir", str(tmp_path / "p"), "--quiet"]) == 0
        rep = json.loads((tmp_path / "p" / "verify_report.json").read_text())
        assert rep["passed"] and rep["verdict"] == "cevm"
        assert len(read_csv(tmp_path / "p" / "tail_grid.csv")) == 25
        assert cli.main(["verify", "--example", "min-independent", "-n", "200000",
                         "--out-dir", str(tmp_path / "m"), "--quiet"]) == 1
        rep = json.loads((tmp_path / "m" / "verify_report.json").read_text())
        assert rep["verdict"] == "asymptotic-independence"

    def test_kernel_limit(self, tmp_path):
        assert cli.main(["kernel-limit", "--example", "exponential", "--out-dir", str(tmp_path),
                         "--quiet"]) == 0
        assert cli.main(["kernel-limit", "--example", "integer-perturbed", "--out-dir",
                         str(tmp_path), "--quiet"]) == 1
        rep = json.loads((tmp_path / "kernel_limit.json").read_text())
        assert rep["report"]["status"] == "nonconvergent" and rep["matches_expected"]

    def test_fit_with_risk(self, tmp_path):
        cli.main(["simulate", "--example", "tail_kernel", "-n", "20000", "--out-dir",
                  str(tmp_path), "--quiet"])
        cfg = {"data": str(tmp_path / "sample.csv"), "risk": [[5.0, 500.0]],
               "out_dir": str(tmp_path / "fit")}
        (tmp_path / "c.json").write_text(json.dumps(cfg))
        assert cli.main(["fit", "--config", str(tmp_path / "c.json"), "--quiet"]) == 0
        out = json.loads((tmp_path / "fit" / "fit.json").read_text())
        assert 0 < out["risk"][0]["probability"] < 1
        assert len(read_csv(tmp_path / "fit" / "residuals.csv")) == out["exceedances"]

    def test_examples_filter(self, tmp_path):
        assert cli.main(["examples", "--filter", "point-mass", "-n", "1000000",
                         "--out-dir", str(tmp_path), "--quiet"]) == 0
        rows = read_csv(tmp_path / "examples.csv")
        assert [r["name"] for r in rows] == ["point-mass"] and rows[0]["ok"] == "True"


class TestExitCodes:
    def test_malformed_json(self, tmp_path, capsys):
        (tmp_path / "bad.json").write_text("{oops")
        assert cli.main(["verify", "--config", str(tmp_path / "bad.json")]) == 2
        assert "malformed JSON" in capsys.readouterr().err

    def test_unknown_field(self, tmp_path, capsys):
        (tmp_path / "c.json").write_text('{"model": {}, "colour": "red"}')
        assert cli.main(["mu", "--config", str(tmp_path / "c.json")]) == 2
        assert "config.colour" in capsys.readouterr().err

    def test_bad_params_json(self, capsys):
        assert cli.main(["mu", "--example", "exponential", "--params", "{lam:"]) == 2
        assert "--params" in capsys.readouterr().err

    def test_unknown_example(self, capsys):
        assert cli.main(["mu", "--example", "weibull"]) == 2
        assert "config.model.example" in capsys.readouterr().err

    def test_bad_grid(self, capsys):
        assert cli.main(["mu", "--example", "exponential", "--x", "0:1:3:log"]) == 2
        assert "config.x" in capsys.readouterr().err

    def test_missing_model_field(self, tmp_path, capsys):
        (tmp_path / "c.json").write_text('{"model": {"y_dist": {"family": "pareto", "params": {"alpha": 1}}}}')
        assert cli.main(["verify", "--config", str(tmp_path / "c.json")]) == 2
        assert "config.model.kernel" in capsys.readouterr().err

    def test_too_little_data(self, tmp_path, capsys):
        (tmp_path / "d.csv").write_text("x,y\n" + "\n".join(f"{i},{i}" for i in range(1, 40)))
        assert cli.main(["fit", "--data", str(tmp_path / "d.csv"), "--out-dir", str(tmp_path)]) == 4
        assert "insufficient data" in capsys.readouterr().err

    def test_missing_data_file(self, tmp_path):
        assert cli.main(["fit", "--data", str(tmp_path / "nope.csv")]) == 2
