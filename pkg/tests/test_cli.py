import json
import subprocess
import sys

import numpy as np
import pytest

from bipartite_clustering import cli
from bipartite_clustering.errors import DegenerateClusterError
from bipartite_clustering.metrics import accuracy, ari, modularity, purity


@pytest.fixture(scope="module")
def synth_files(tmp_path_factory):
    prefix = tmp_path_factory.mktemp("synth") / "s"
    args = ["synth", "--r", "30", "--k", "3", "--n", "800", "--nu", "5", "--sep", "0.9", "--seed", "3"]
    assert cli.main(args + ["--out-prefix", str(prefix)]) == 0
    return prefix


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return str(path)


def test_help_lists_defaults(capsys):
    assert cli.main(["cluster", "--help"]) == 0
    out = " ".join(capsys.readouterr().out.split())
    for flag in ("--input", "--returns", "--k", "--nu", "--fit-nu", "--rho", "--mu", "--eta", "--inner-iters",
                 "--max-iter", "--tol", "--init", "--seed", "--truth", "--out", "--dot", "--threshold"):
        assert flag in out
    assert "default: 1.0" in out and "absolute value" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bipartite_clustering", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "cluster" in proc.stdout


def test_synth_writes_three_files(synth_files):
    for suffix in (".csv", "_labels.csv", "_B.json"):
        assert (synth_files.parent / (synth_files.name + suffix)).exists()
    header = (synth_files.parent / "s.csv").read_text().splitlines()[0].split(",")
    assert len(header) == 30
    B = np.asarray(json.loads((synth_files.parent / "s_B.json").read_text())["B"])
    assert B.shape == (30, 3)


def test_synth_is_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        prefix = str(tmp_path / name)
        assert cli.main(["synth", "--r", "9", "--k", "3", "--n", "40", "--seed", "1", "--out-prefix", prefix]) == 0
        outs.append([(tmp_path / f"{name}{s}").read_bytes() for s in (".csv", "_labels.csv", "_B.json")])
    assert outs[0] == outs[1]


def test_synth_rejects_weak_separation(tmp_path):
    assert cli.main(["synth", "--sep", "0.2", "--k", "3", "--out-prefix", str(tmp_path / "x")]) == 1


def test_cluster_round_trip(synth_files, tmp_path):
    out, dot, bout = tmp_path / "r.json", tmp_path / "g.dot", tmp_path / "b.json"
    code = cli.main([
        "cluster", "--input", f"{synth_files}.csv", "--returns", "--k", "3", "--truth", f"{synth_files}_labels.csv",
        "--init", "normal", "--seed", "7", "--out", str(out), "--dot", str(dot), "--b-out", str(bout),
    ])
    assert code == 0
    report = json.loads(out.read_text())
    assert {"labels", "metrics", "config", "iterations", "converged", "trace", "timing_ms"} <= set(report)
    assert set(report["metrics"]) == {"acc", "purity", "mod", "ari", "chi"}
    assert report["metrics"]["ari"] >= 0.9
    assert len(report["labels"]) == 30 and set(report["labels"]) <= {0, 1, 2}
    assert report["config"]["nu_source"] == "fitted"
    assert set(report["trace"][0]) == {"iter", "objective", "primal_residual"}
    text = dot.read_text()
    assert text.startswith("digraph") and '"m000" -> "center_' in text
    assert np.asarray(json.loads(bout.read_text())["B"]).shape == (30, 3)


def test_cluster_without_truth_reports_reasons(synth_files, tmp_path, capsys):
    code = cli.main(["cluster", "--input", f"{synth_files}.csv", "--returns", "--k", "3", "--nu", "5",
                     "--max-iter", "5"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["metrics"]["acc"] is None
    assert report["metric_reasons"]["acc"] == "no truth labels provided"
    assert report["config"]["nu"] == 5.0 and report["config"]["max_outer"] == 5


def test_dot_threshold():
    B = np.array([[0.9, 0.1], [1e-8, 1.0 - 1e-8]])
    text = cli.to_dot(B, ["a", "b"], threshold=1e-6)
    assert '"a" -> "center_1"' in text and '"b" -> "center_0"' not in text


@pytest.mark.parametrize(
    "args,code",
    [
        (["cluster", "--k", "3"], 1),  # --input missing
        (["cluster", "--input", "x.csv", "--k", "1"], 1),
        (["cluster", "--input", "x.csv", "--k", "two"], 1),
        (["cluster", "--input", "x.csv", "--k", "2", "--mu", "-1"], 1),
        (["cluster", "--input", "missing.csv", "--k", "2"], 2),
        (["bogus"], 1),
    ],
)
def test_exit_codes(args, code, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.main(args) == code


def test_k_one_is_usage_error(tmp_path):
    path = _write(tmp_path / "p.csv", "A,B,C\n1,2,3\n2,3,4\n3,2,1\n")
    assert cli.main(["cluster", "--input", path, "--k", "1"]) == 1


def test_bad_prices_are_data_errors(tmp_path):
    path = _write(tmp_path / "p.csv", "A,B,C\n1,2,3\n-2,3,4\n")
    assert cli.main(["cluster", "--input", path, "--k", "2", "--nu", "5"]) == 2


def test_degenerate_cluster_exit_code(synth_files, monkeypatch):
    def boom(*args, **kwargs):
        raise DegenerateClusterError("cluster 2 has no members")

    monkeypatch.setattr(cli, "run", boom)
    assert cli.main(["cluster", "--input", f"{synth_files}.csv", "--returns", "--k", "3", "--nu", "5"]) == 3


def test_eval_identical_labels(tmp_path, capsys):
    truth = _write(tmp_path / "t.csv", "asset,label\na,0\nb,0\nc,1\nd,2\n")
    assert cli.main(["eval", "--labels", truth, "--truth", truth]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["metrics"]["acc"] == out["metrics"]["ari"] == out["metrics"]["purity"] == 1.0
    assert out["metrics"]["mod"] is None
    assert out["metric_reasons"]["mod"] == "no graph provided"


def test_eval_reproduces_hand_values(tmp_path, capsys):
    truth = _write(tmp_path / "t.csv", "asset,label\na,0\nb,0\nc,1\nd,1\n")
    pred = _write(tmp_path / "p.csv", "asset,label\na,0\nb,1\nc,0\nd,1\n")
    good = _write(tmp_path / "g.csv", "asset,label\na,0\nb,0\nc,1\nd,1\n")
    graph = _write(tmp_path / "B.json", json.dumps({"B": [[1, 0], [1, 0], [0, 1], [0, 1]]}))
    # two samples v and -v: demeaning leaves them intact and CHI is unchanged
    data = _write(tmp_path / "x.csv", "a,b,c,d\n0,1,10,11\n-0,-1,-10,-11\n")
    assert cli.main(["eval", "--labels", pred, "--truth", truth]) == 0
    m = json.loads(capsys.readouterr().out)["metrics"]
    assert m["ari"] == ari([0, 0, 1, 1], [0, 1, 0, 1]) and abs(m["ari"] + 0.5) <= 1e-12
    assert m["acc"] == accuracy([0, 0, 1, 1], [0, 1, 0, 1]) == 0.5
    assert m["purity"] == purity([0, 0, 1, 1], [0, 1, 0, 1])
    assert cli.main(["eval", "--labels", good, "--truth", truth, "--graph", graph, "--input", data, "--returns"]) == 0
    m = json.loads(capsys.readouterr().out)["metrics"]
    assert abs(m["mod"] - 0.5) <= 1e-12 and m["mod"] == modularity(np.array([[1, 0], [1, 0], [0, 1], [0, 1.0]]), [0, 0, 1, 1])
    assert abs(m["chi"] - 200.0) <= 1e-12


def test_eval_from_report(synth_files, tmp_path, capsys):
    out = tmp_path / "r.json"
    assert cli.main(["cluster", "--input", f"{synth_files}.csv", "--returns", "--k", "3", "--nu", "5",
                     "--out", str(out)]) == 0
    assert cli.main(["eval", "--report", str(out), "--truth", f"{synth_files}_labels.csv",
                     "--input", f"{synth_files}.csv", "--returns"]) == 0
    m = json.loads(capsys.readouterr().out)["metrics"]
    assert m["ari"] >= 0.9 and m["chi"] is not None


def test_labels_matched_by_name(tmp_path):
    path = _write(tmp_path / "t.csv", "asset,label\nb,1\na,0\n")
    np.testing.assert_array_equal(cli.read_labels(path, ("a", "b")), [0, 1])
