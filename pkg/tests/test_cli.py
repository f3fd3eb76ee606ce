import csv
import json
import sys
from pathlib import Path

import numpy as np
import pytest

from jitune.cli import main
from jitune.coarsen import load_synopsis
from jitune.embed import load_embedding, save_embedding
from jitune.evaluation import EvalResult
from jitune.graph import load_edge_list, save_graph
from jitune.tune import TrialLog

from conftest import sbm

PLUGIN = f"{sys.executable} {Path(__file__).parent / 'plugins' / 'fake_embedder.py'}"


@pytest.fixture(scope="module")
def toy(tmp_path_factory):
    d = tmp_path_factory.mktemp("toy")
    g = sbm([30, 30], 0.3, 0.03, seed=11)
    save_graph(g, d / "g.edges", d / "g.labels")
    return d, g


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_tune_artifacts(toy, tmp_path, capsys):
    d, _ = toy
    out = tmp_path / "run"
    code, stdout, _ = run(["tune", "--edges", d / "g.edges", "--embedder", "deepwalk",
                           "--fixed", "num_walks=4", "--fixed", "walk_length=10",
                           "--budget-rounds", 10, "--out", out], capsys)
    assert code == 0
    for name in ("theta_opt.json", "trials.jsonl", "trials.csv", "curve.csv", "summary.json"):
        assert (out / name).exists()
    theta = json.loads((out / "theta_opt.json").read_text())
    assert set(theta["config"]) == {"window", "dim"}
    assert theta["fixed"] == {"num_walks": 4, "walk_length": 10}
    log = TrialLog.from_jsonl((out / "trials.jsonl").read_text())
    with open(out / "trials.csv", newline="") as fh:
        assert TrialLog.read_csv(fh).to_jsonl() == log.to_jsonl()
    curve = read_csv(out / "curve.csv")
    assert len(curve) == len(log)
    inc = [float(r["incumbent"]) for r in curve if r["incumbent"]]
    assert inc == sorted(inc)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["budget_holds"] and summary["budget"]["R"] == 10
    assert json.loads(stdout)["performance"] == theta["performance"]


def test_tune_is_byte_identical(toy, tmp_path, capsys):
    d, _ = toy
    outs = []
    for i, workers in enumerate([1, 1, 4]):
        out = tmp_path / f"r{i}"
        code, _, _ = run(["tune", "--edges", d / "g.edges", "--embedder", "arope",
                          "--fixed", "dim=4", "--budget-rounds", 8, "--seed", 7,
                          "--workers", workers, "--out", out], capsys)
        assert code == 0
        outs.append(out)
    for name in ("theta_opt.json", "trials.jsonl", "trials.csv", "curve.csv"):
        blobs = {(o / name).read_bytes() for o in outs}
        assert len(blobs) == 1, name


def test_missing_edge_file(tmp_path, capsys):
    code, _, err = run(["tune", "--edges", tmp_path / "nope.edges", "--budget-rounds", 5,
                        "--out", tmp_path / "o"], capsys)
    assert code == 1
    msg = json.loads(err.strip())
    assert "nope.edges" in msg["error"]
    assert len(err.strip().splitlines()) == 1


def test_bad_budget_spec(toy, tmp_path, capsys):
    d, _ = toy
    code, _, err = run(["tune", "--edges", d / "g.edges", "--out", tmp_path / "o"], capsys)
    assert code == 1 and "budget" in json.loads(err)["error"]


def test_malformed_edges(tmp_path, capsys):
    (tmp_path / "bad.edges").write_text("0 1\n1 two three four\n")
    code, _, err = run(["coarsen", "--edges", tmp_path / "bad.edges", "--out", tmp_path / "o"],
                       capsys)
    assert code == 1 and "line 2" in json.loads(err)["error"]


def test_all_trials_failing_exits_2(toy, tmp_path, capsys):
    d, _ = toy
    code, _, err = run(["tune", "--edges", d / "g.edges", "--embedder", "gcn",
                        "--plugin-cmd", PLUGIN + " fail", "--budget-rounds", 4,
                        "--out", tmp_path / "o"], capsys)
    assert code == 2
    assert json.loads(err)["type"] == "AllTrialsFailed"


def test_coarsen(tmp_path, capsys):
    g = sbm([500, 500], 0.01, 0.001, seed=4)
    save_graph(g, tmp_path / "big.edges")
    outs = []
    for i in range(2):
        out = tmp_path / f"c{i}"
        code, stdout, _ = run(["coarsen", "--edges", tmp_path / "big.edges", "--out", out],
                              capsys)
        assert code == 0 and "selected level" in stdout
        outs.append(out)
    rows = read_csv(outs[0] / "summary.csv")
    assert rows and list(rows[0]) == ["level", "nodes", "edges", "alpha", "delta_w", "kl"]
    nodes = [int(r["nodes"]) for r in rows]
    assert all(a > b for a, b in zip(nodes, nodes[1:]))
    for r in rows:
        syn = load_synopsis(outs[0] / f"level{r['level']}.edges",
                            outs[0] / f"level{r['level']}.proj")
        assert syn.node_count == int(r["nodes"])
        assert syn.graph.edge_count == int(r["edges"])
        assert syn.alpha == float(r["alpha"])
    for f in sorted(outs[0].iterdir()):
        assert f.read_bytes() == (outs[1] / f.name).read_bytes()


def test_coarsen_single_node(tmp_path, capsys):
    (tmp_path / "one.edges").write_text("0 0\n")
    code, _, _ = run(["coarsen", "--edges", tmp_path / "one.edges", "--out", tmp_path / "o"],
                     capsys)
    assert code == 1


def test_eval_one_hot(toy, tmp_path, capsys):
    d, g = toy
    emb = np.eye(2)[[next(iter(s)) for s in g.labels]]
    save_embedding(emb, tmp_path / "emb.txt")
    assert np.array_equal(load_embedding(tmp_path / "emb.txt"), emb)
    code, stdout, _ = run(["eval", "--edges", d / "g.edges", "--labels", d / "g.labels",
                           "--task", "classification", "--embedding", tmp_path / "emb.txt"],
                          capsys)
    assert code == 0
    res = EvalResult.from_json(stdout)
    assert (res.metric, res.value) == ("MicroF1", 1.0)


def test_eval_link_prediction(toy, tmp_path, capsys):
    d, g = toy
    emb = np.eye(2)[[next(iter(s)) for s in g.labels]]
    save_embedding(emb, tmp_path / "emb.txt")
    code, stdout, _ = run(["eval", "--edges", d / "g.edges", "--embedding", tmp_path / "emb.txt"],
                          capsys)
    res = EvalResult.from_json(stdout)
    assert code == 0 and res.metric == "AUC" and res.details["positives"] == round(0.2 * g.edge_count)


def test_eval_wrong_row_count(toy, tmp_path, capsys):
    d, _ = toy
    save_embedding(np.ones((5, 2)), tmp_path / "emb.txt")
    code, _, err = run(["eval", "--edges", d / "g.edges", "--embedding", tmp_path / "emb.txt"],
                       capsys)
    assert code == 1 and "rows" in json.loads(err)["error"]


def test_compare(toy, tmp_path, capsys):
    d, _ = toy
    code, _, _ = run(["compare", "--edges", d / "g.edges", "--embedder", "arope",
                      "--fixed", "dim=4", "--methods", "jitune,random", "--budget-rounds", 10,
                      "--seeds", 5, "--out", tmp_path / "cmp"], capsys)
    assert code == 0
    rows = read_csv(tmp_path / "cmp" / "compare.csv")
    assert len(rows) == 10
    assert list(rows[0]) == ["method", "seed", "metric", "value", "time_s", "rounds_used"]
    assert {r["method"] for r in rows} == {"jitune", "random"}
    assert all(float(r["rounds_used"]) <= 10 for r in rows)


def test_compare_needs_two_methods(toy, tmp_path, capsys):
    d, _ = toy
    code, _, err = run(["compare", "--edges", d / "g.edges", "--methods", "random",
                        "--budget-rounds", 4, "--out", tmp_path / "cmp"], capsys)
    assert code == 1 and "two methods" in json.loads(err)["error"]


def test_graph_file_written_by_library_is_readable(toy):
    d, g = toy
    assert load_edge_list(d / "g.edges", num_nodes=g.node_count).same_as(
        g.with_labels(None))
