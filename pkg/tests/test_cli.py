import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from tensor_ising import bahadur as bh
from tensor_ising import cli
from tensor_ising import landscape as ls


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def table(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


class TestThreshold:
    def test_p2(self, capsys):
        code, out, _ = run(capsys, "threshold", "--p", "2")
        assert code == 0 and out.strip() == "0.500000"

    def test_p3(self, capsys):
        code, out, _ = run(capsys, "threshold", "--p", "3")
        assert code == 0 and abs(float(out) - 0.672) <= 1e-3

    def test_p1_usage(self, capsys):
        code, _, err = run(capsys, "threshold", "--p", "1")
        assert code == 1 and "--p" in err

    def test_precision_and_csv(self, capsys):
        code, out, _ = run(capsys, "threshold", "--p", "3", "--precision", "10")
        assert out.strip() == f"{ls.beta_star(3):#.10g}"
        code, out, _ = run(capsys, "threshold", "--p", "3", "--format", "csv")
        assert out.startswith("# provenance: ")
        assert float(table(out)[0]["beta_star"]) == ls.beta_star(3)

    def test_missing_and_unknown(self, capsys):
        assert run(capsys, "threshold")[0] == 1
        assert run(capsys, "bogus")[0] == 1
        assert run(capsys)[0] == 1

    def test_module_entry(self):
        res = subprocess.run([sys.executable, "-m", "tensor_ising", "threshold", "--p", "2"],
                             capture_output=True, text=True, check=False)
        assert res.returncode == 0 and res.stdout.strip() == "0.500000"


class TestEfficiency:
    def test_reference(self, capsys):
        code, out, _ = run(capsys, "efficiency", "--p", "2", "--beta0", "0.7", "--beta", "0.9", "--format", "csv")
        row = table(out)[0]
        assert code == 0
        assert abs(float(row["n_star_mple"]) - 270) <= 1 and row["n_star_mple"] == row["n_star_mle"]
        code, out, _ = run(capsys, "efficiency", "--p", "3", "--beta0", "0.68", "--beta", "0.9", "--format", "json")
        d = json.loads(out)
        assert abs(d["n_star_mple"] - 679) <= 2 and abs(d["n_star_mle"] - 533) <= 2
        assert d["provenance"]["config"]["beta0"] == 0.68

    def test_below_threshold(self, capsys):
        code, _, err = run(capsys, "efficiency", "--p", "3", "--beta0", "0.6", "--beta", "0.9")
        assert code == 2 and "threshold" in err

    def test_bad_delta(self, capsys):
        code, _, _ = run(capsys, "efficiency", "--p", "2", "--beta0", "0.7", "--beta", "0.9", "--delta", "1.5")
        assert code == 2

    def test_low_precision_warning(self, capsys):
        b0 = repr(ls.beta_star(3) + 5e-5)
        code, out, _ = run(capsys, "efficiency", "--p", "3", "--beta0", b0, "--beta", "0.9")
        assert code == 0 and "warning" in out


class TestSweep:
    def test_beta_grid_ordering(self, capsys):
        code, out, _ = run(capsys, "sweep", "--p", "2,3,4", "--beta0", "0.7", "--beta", "0.75:1.51:0.05")
        rows = table(out)
        assert code == 0
        by_p = {p: [float(r["n_star_mple"]) for r in rows if r["p"] == str(p)] for p in (2, 3, 4)}
        assert len(by_p[2]) == len(by_p[3]) == len(by_p[4]) == 16
        for p in (2, 3, 4):
            assert np.all(np.diff(by_p[p]) < 0)
        assert np.all(np.array(by_p[2]) < np.array(by_p[3]))
        assert np.all(np.array(by_p[3]) < np.array(by_p[4]))

    def test_window_split(self, capsys):
        code, out, _ = run(capsys, "sweep", "--p", "3", "--beta0", "0.673:0.75:0.001", "--beta", "0.9")
        upper = bh.inefficiency_window(0.9, 3).upper
        for r in table(out):
            b0, differ = float(r["beta0"]), float(r["c_mple"]) < float(r["c_mle"])
            assert differ == (b0 < upper)

    def test_empty(self, capsys):
        code, out, _ = run(capsys, "sweep", "--p", "2", "--beta0", "", "--beta", "0.9")
        assert code == 0
        lines = [ln for ln in out.splitlines() if not ln.startswith("#")]
        assert lines == [",".join(bh.CSV_COLUMNS)]

    def test_bad_range(self, capsys):
        assert run(capsys, "sweep", "--beta0", "0.7:0.8", "--beta", "0.9")[0] == 1


class TestParseList:
    def test_forms(self):
        assert cli.parse_list("1,2.5") == [1.0, 2.5]
        assert cli.parse_list("175:180:1", int) == [175, 176, 177, 178, 179]
        assert cli.parse_list("0.1:0.4:0.1") == [0.1, 0.2, 0.3]
        assert cli.parse_list("") == []
        assert cli.parse_list([3, 4], int) == [3, 4]


class TestSimulate:
    def test_cw_determinism(self, capsys, tmp_path):
        a = tmp_path / "a.csv"
        runs = []
        for _ in range(2):
            assert run(capsys, "simulate", "--p", "3", "--beta", "0.9", "--n", "50", "--count", "20",
                       "--seed", "7", "-o", str(a))[0] == 0
            runs.append(a.read_bytes())
        assert runs[0] == runs[1]
        rows = table(a.read_text())
        assert len(rows) == 20 and all(len(r["spins"]) == 50 for r in rows)
        assert all(float(r["mean"]) == pytest.approx(r["spins"].count("+") / 25 - 1) for r in rows)

    def test_er_determinism(self, capsys):
        argv = ["simulate", "--model", "ER", "--p", "2", "--beta", "0.9", "--n", "30", "--count", "3",
                "--alpha", "0.5", "--steps", "3000", "--means-only", "--seed", "4"]
        _, a, _ = run(capsys, *argv)
        _, b, _ = run(capsys, *argv)
        assert a == b and list(table(a)[0]) == ["replicate", "mean"]

    def test_budget_exit(self, capsys):
        code, _, _ = run(capsys, "simulate", "--model", "ER", "--p", "3", "--beta", "0.9", "--n", "100000",
                         "--alpha", "0.5")
        assert code == 4


class TestConfig:
    def test_flags_override_file(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"p": 3, "beta0": 0.7, "beta": 0.9, "delta": 0.05}))
        _, out, _ = run(capsys, "efficiency", "--config", str(cfg), "--format", "json")
        assert json.loads(out)["delta"] == 0.05
        _, out, _ = run(capsys, "efficiency", "--config", str(cfg), "--delta", "0.01", "--format", "json")
        d = json.loads(out)
        assert d["delta"] == 0.01 and d["provenance"]["config"]["delta"] == 0.01 and d["p"] == 3

    def test_bad_config(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"nonsense": 1}))
        assert run(capsys, "threshold", "--config", str(cfg))[0] == 1
        cfg.write_text("{not json")
        assert run(capsys, "threshold", "--config", str(cfg))[0] == 1


class TestExperimentsCommands:
    def test_pvalue_curve_files(self, capsys, tmp_path):
        out = tmp_path / "curve.csv"
        argv = ["pvalue-curve", "--p", "2", "--beta0", "0.7", "--beta", "0.9", "--replicates", "200",
                "--n-grid", "100:131:10", "--seed", "3", "-o", str(out)]
        assert run(capsys, *argv)[0] == 0
        first = out.read_bytes()
        rows = table(out.read_text())
        assert [int(r["n"]) for r in rows] == [100, 110, 120, 130]
        side = json.loads((tmp_path / "curve.csv.json").read_text())
        assert side["seed"] == 3 and "runtime_seconds" in side
        assert side["theoretical_N"] == pytest.approx(269.49, abs=0.01)
        assert run(capsys, *argv)[0] == 0
        assert out.read_bytes() == first

    def test_pvalue_curve_stdout(self, capsys):
        code, out, err = run(capsys, "pvalue-curve", "--replicates", "20", "--n-grid", "50,60")
        assert code == 0 and "empirical_N=" in err and len(table(out)) == 2

    def test_ldp(self, capsys):
        code, out, _ = run(capsys, "ldp", "--p", "2", "--beta", "0.7", "--interval", "0.9,1", "--format", "csv")
        gaps = [float(r["gap"]) for r in table(out)]
        assert code == 0 and len(gaps) == 4 and gaps[-1] <= 0.02
        assert run(capsys, "ldp", "--p", "2", "--beta", "0.7", "--interval", "0.9")[0] == 1

    def test_histogram(self, capsys):
        code, out, _ = run(capsys, "histogram", "--p", "2", "--beta", "1.0", "--n", "200", "--replicates", "500",
                           "--bins", "10", "--format", "json")
        d = json.loads(out)
        assert code == 0 and len(d["bins"]) == 10
        assert d["overlay_variance"] > 0 and d["n_finite"] + d["n_diverged"] == 500

    def test_landscape(self, capsys):
        code, out, _ = run(capsys, "landscape", "--p", "3", "--beta", "0.9", "--format", "json")
        d = json.loads(out)
        assert code == 0 and d["m_star"] == ls.m_star(0.9, 3)
        code, _, _ = run(capsys, "landscape", "--p", "3", "--beta", "0.5")
        assert code == 2
        code, out, _ = run(capsys, "landscape", "--p", "2", "--beta", "0.3", "--x", "0,1", "--format", "csv")
        assert [float(r["H"]) for r in table(out)] == [0.0, 0.3 - np.log(2)]
