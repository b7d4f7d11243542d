import io
import json

import numpy as np
import pytest

from kdeaqp.bandwidth import lscv_H_bandwidth, lscv_h_bandwidth, plugin_bandwidth
from kdeaqp.cli import run
from kdeaqp.dataset import Dataset, write_csv
from kdeaqp.kde import KdeModel, kde_eval_batch
from kdeaqp.linalg import vech
from kdeaqp.synthetic import gaussian_dataset


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def call_json(*argv):
    code, out, err = call(*argv, "--json")
    assert code == 0, err
    return json.loads(out)


@pytest.fixture
def three(tmp_path):
    p = tmp_path / "three.csv"
    p.write_text("1\n2\n3\n")
    return p


@pytest.fixture
def two_d(tmp_path):
    p = tmp_path / "two.csv"
    write_csv(gaussian_dataset(120, 2, 9), p)
    return p


class TestBandwidth:
    def test_plugin_matches_library(self, three):
        rec = call_json("bandwidth", "plugin", "--input", three)
        assert rec["result"]["h"] == plugin_bandwidth(Dataset([[1.0, 2.0, 3.0]])).h
        assert set(rec) == {"command", "params", "result", "timings_ms"}
        assert rec["params"]["n"] == 3 and rec["command"] == "bandwidth plugin"
        assert "load" in rec["timings_ms"]

    def test_text_and_json_agree(self, three):
        rec = call_json("bandwidth", "plugin", "--input", three)
        code, text, _ = call("bandwidth", "plugin", "--input", three)
        assert code == 0
        assert f"result.h: {rec['result']['h']!r}" in text
        assert f"result.trace.psi4: {rec['result']['trace']['psi4']!r}" in text

    def test_lscv_h(self, two_d):
        rec = call_json("bandwidth", "lscv-h", "--input", two_d, "--grid", 30, "--mode", "thr:2")
        from kdeaqp.bandwidth import LscvHConfig
        expected = lscv_h_bandwidth(gaussian_dataset(120, 2, 9), LscvHConfig(n_grid=30)).h
        assert rec["result"]["h"] == expected

    def test_lscv_matrix(self, two_d):
        rec = call_json("bandwidth", "lscv-matrix", "--input", two_d, "--max-iter", 40)
        from kdeaqp.bandwidth import LscvHMatrixConfig
        res = lscv_H_bandwidth(gaussian_dataset(120, 2, 9), LscvHMatrixConfig(max_iterations=40))
        assert rec["result"]["d"] == 2
        assert rec["result"]["vech_H"] == vech(res.H).tolist()

    def test_plugin_rejects_2d(self, two_d):
        code, out, err = call("bandwidth", "plugin", "--input", two_d)
        assert code == 1 and out == "" and "d = 2" in err

    def test_missing_file(self, tmp_path):
        code, _, err = call("bandwidth", "plugin", "--input", tmp_path / "none.csv")
        assert code == 1 and "none.csv" in err

    def test_bad_csv(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1,2\n3\n")
        code, _, err = call("bandwidth", "lscv-h", "--input", p)
        assert code == 1 and "row 2" in err


class TestUsage:
    def test_unknown_flag(self, three, capsys):
        code, _, _ = call("bandwidth", "plugin", "--input", three, "--frobnicate")
        assert code == 2
        assert "usage:" in capsys.readouterr().err

    def test_missing_subcommand(self, capsys):
        assert call()[0] == 2

    def test_bad_mode(self, three, capsys):
        assert call("bandwidth", "plugin", "--input", three, "--mode", "gpu")[0] == 2

    def test_bad_range(self, three, capsys):
        assert call("aqp", "count", "--input", three, "--col", 0, "--range", "1-2")[0] == 2


class TestKde:
    def test_scalar(self, three, tmp_path):
        pts = tmp_path / "pts.csv"
        pts.write_text("0\n1.5\n")
        rec = call_json("kde", "eval", "--input", three, "--h", 0.5, "--points", pts)
        model = KdeModel.with_h(Dataset([[1.0, 2.0, 3.0]]), 0.5)
        assert rec["result"]["density"] == kde_eval_batch(model, [0.0, 1.5]).tolist()

    def test_matrix(self, two_d, tmp_path):
        Hf, pts = tmp_path / "H.csv", tmp_path / "pts.csv"
        Hf.write_text("0.2,0.05\n0.05,0.3\n")
        pts.write_text("0,0\n1,-1\n")
        rec = call_json("kde", "eval", "--input", two_d, "--H-file", Hf, "--points", pts)
        model = KdeModel.with_H(gaussian_dataset(120, 2, 9), [[0.2, 0.05], [0.05, 0.3]])
        assert rec["result"]["density"] == kde_eval_batch(model, [[0, 0], [1, -1]]).tolist()
        assert rec["params"]["vech_H"] == [0.2, 0.05, 0.3]

    def test_h_and_H_exclusive(self, three, tmp_path):
        code, _, _ = call("kde", "eval", "--input", three, "--h", 1, "--H-file", three,
                          "--points", three)
        assert code == 2

    def test_non_pd_matrix(self, two_d, tmp_path):
        Hf = tmp_path / "H.csv"
        Hf.write_text("1,2\n2,1\n")
        code, _, err = call("kde", "eval", "--input", two_d, "--H-file", Hf, "--points", two_d)
        assert code == 1 and "positive-definite" in err


class TestAqp:
    def test_count_fixed_h(self, three):
        rec = call_json("aqp", "count", "--input", three, "--col", 0, "--range", ":", "--h", 0.4)
        assert rec["result"]["value"] == pytest.approx(3.0, rel=0.01)
        assert rec["params"]["range"] == ":"

    def test_negative_bound(self, three):
        rec = call_json("aqp", "avg", "--input", three, "--col", 0, "--range=-10:2.5",
                        "--select", "plugin")
        assert rec["result"]["value"] < 2.5
        assert rec["params"]["range"] == "-10.0:2.5"
        assert rec["params"]["bandwidth_method"] == "plugin"

    def test_2d_default_selector(self, two_d):
        rec = call_json("aqp", "count", "--input", two_d, "--col", 0, "--range", ":",
                        "--col2", 1, "--range2", ":", "--resolution", 256)
        assert rec["params"]["bandwidth_method"] == "lscv-h"
        assert rec["result"]["value"] == pytest.approx(120, rel=0.01)

    def test_col2_needs_range2(self, two_d):
        code, _, err = call("aqp", "count", "--input", two_d, "--col", 0, "--range", "0:1",
                            "--col2", 1)
        assert code == 1 and "--range2" in err

    def test_empty_avg(self, three):
        code, _, err = call("aqp", "avg", "--input", three, "--col", 0, "--range", "50:60",
                            "--h", 0.2)
        assert code == 1 and "count" in err

    def test_column_out_of_range(self, three):
        assert call("aqp", "count", "--input", three, "--col", 3, "--range", "0:1")[0] == 1


class TestBench:
    @pytest.mark.parametrize("algo, n, d", [("plugin", 256, 1), ("lscv-h", 64, 2),
                                            ("lscv-matrix", 64, 2)])
    def test_values_identical_across_modes(self, algo, n, d):
        rec = call_json("bench", "--algo", algo, "--n", n, "--d", d, "--mode", "thr:2",
                        "--repeat", 1)
        row, = rec["result"]["rows"]
        assert row["value_mode"] == pytest.approx(row["value_seq"], rel=1e-12)
        assert row["seq_ms"] > 0 and row["speedup"] > 0
        assert (row["n"], row["d"]) == (n, d)

    def test_seed_reproducible(self):
        a = call_json("bench", "--algo", "plugin", "--n", 128, "--d", 1, "--mode", "seq",
                      "--repeat", 1, "--seed", 4)
        b = call_json("bench", "--algo", "plugin", "--n", 128, "--d", 1, "--mode", "vec",
                      "--repeat", 1, "--seed", 4)
        assert a["result"]["rows"][0]["value_seq"] == b["result"]["rows"][0]["value_mode"]

    def test_plugin_largest_size(self):
        rec = call_json("bench", "--algo", "plugin", "--n", 32768, "--d", 1, "--mode", "thr",
                        "--repeat", 1)
        assert rec["result"]["rows"][0]["n"] == 32768

    def test_plugin_needs_d1(self):
        assert call("bench", "--algo", "plugin", "--n", 100, "--d", 2)[0] == 1


def test_module_entry_point(three):
    import subprocess
    import sys
    proc = subprocess.run([sys.executable, "-m", "kdeaqp", "bandwidth", "plugin", "--input",
                           str(three), "--json"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert np.isclose(json.loads(proc.stdout)["result"]["h"], 1.0484793297529582, rtol=1e-12)
