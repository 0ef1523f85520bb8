import csv
import json
import subprocess
import sys

import pytest

from fastbcc.cli import main
from fastbcc.graph import write_edge_list, write_labels

from conftest import clique_pair_graph


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def k23(tmp_path):
    edges = tmp_path / "k23.txt"
    labels = tmp_path / "k23.labels"
    edges.write_text("# K_{2,3}\n" + "".join(f"{u} {v}\n" for u in (1, 2) for v in (10, 11, 12)))
    labels.write_text("1 L\n2 L\n10 R\n11 R\n12 R\n")
    return edges, labels


@pytest.fixture
def pair_files(tmp_path):
    g, ids = clique_pair_graph()
    write_edge_list(g, tmp_path / "pair.txt")
    write_labels(g, tmp_path / "pair.labels")
    return tmp_path / "pair.txt", tmp_path / "pair.labels", ids


def test_build_index_k23(capsys, k23, tmp_path):
    edges, labels = k23
    code, out, _ = run(capsys, "build-index", "--graph", edges, "--labels", labels, "--out", tmp_path / "a.idx")
    assert code == 0
    rec = json.loads(out)
    assert rec["butterflies"] == 3 and rec["vertices"] == 5 and rec["edges"] == 6


def test_build_index_is_byte_identical(capsys, k23, tmp_path):
    edges, labels = k23
    for name in ("a.idx", "b.idx"):
        run(capsys, "build-index", "--graph", edges, "--labels", labels, "--out", tmp_path / name)
    assert (tmp_path / "a.idx").read_bytes() == (tmp_path / "b.idx").read_bytes()


def test_missing_label_file(capsys, k23, tmp_path):
    edges, _ = k23
    missing = tmp_path / "nope.labels"
    code, out, err = run(capsys, "build-index", "--graph", edges, "--labels", missing, "--out", tmp_path / "x.idx")
    assert code != 0 and out == ""
    assert str(missing) in err


def test_unlabelled_vertex_reported(capsys, k23, tmp_path):
    edges, labels = k23
    labels.write_text("1 L\n2 L\n10 R\n")
    code, _, err = run(capsys, "build-index", "--graph", edges, "--labels", labels, "--out", tmp_path / "x.idx")
    assert code == 2 and "11" in err


def build(capsys, files, tmp_path):
    edges, labels, _ = files
    run(capsys, "build-index", "--graph", edges, "--labels", labels, "--out", tmp_path / "pair.idx")
    return tmp_path / "pair.idx"


@pytest.mark.parametrize("strategy", ["basic", "fast"])
def test_query_clique_pair(capsys, pair_files, tmp_path, strategy):
    edges, labels, ids = pair_files
    idx = build(capsys, pair_files, tmp_path)
    code, out, _ = run(capsys, "query", "--graph", edges, "--labels", labels, "--index", idx,
                       "--ql", ids["a1"], "--qr", ids["qr"], "--k1", 3, "--k2", 5, "--b", 1,
                       "--strategy", strategy)
    assert code == 0
    rec = json.loads(out)
    assert rec["valid"] == 1 and rec["found"] == 1 and rec["strategy"] == strategy
    assert sorted(rec["community"]) == list(range(10))
    assert rec["chi_l"] == 1 and rec["chi_r"] == 1
    assert {"t_distance", "t_leader", "query_distance"} <= set(rec)


def test_query_b_too_large(capsys, pair_files, tmp_path):
    edges, labels, ids = pair_files
    idx = build(capsys, pair_files, tmp_path)
    code, out, _ = run(capsys, "query", "--graph", edges, "--labels", labels, "--index", idx,
                       "--ql", ids["a1"], "--qr", ids["qr"], "--k1", 3, "--k2", 5, "--b", 2)
    rec = json.loads(out)
    assert code == 0 and rec["found"] == 0 and rec["reason"] == "criterion-4"


def test_query_unknown_vertex_and_wrong_index(capsys, pair_files, k23, tmp_path):
    edges, labels, ids = pair_files
    idx = build(capsys, pair_files, tmp_path)
    code, _, err = run(capsys, "query", "--graph", edges, "--labels", labels, "--index", idx,
                       "--ql", 999, "--qr", ids["qr"], "--k1", 3, "--k2", 5)
    assert code == 2 and "999" in err
    k23_idx = tmp_path / "k23.idx"
    run(capsys, "build-index", "--graph", k23[0], "--labels", k23[1], "--out", k23_idx)
    code, _, err = run(capsys, "query", "--graph", edges, "--labels", labels, "--index", k23_idx,
                       "--ql", ids["a1"], "--qr", ids["qr"], "--k1", 3, "--k2", 5)
    assert code == 2 and "vertices" in err


def test_validate_command(capsys, pair_files, tmp_path):
    edges, labels, ids = pair_files
    comm = tmp_path / "c.txt"
    comm.write_text(" ".join(str(v) for v in range(10)))
    code, out, _ = run(capsys, "validate", "--graph", edges, "--labels", labels, "--community", comm,
                       "--ql", ids["a1"], "--qr", ids["qr"], "--k1", 3, "--k2", 5)
    assert code == 0 and json.loads(out)["valid"] is True
    comm.write_text(" ".join(str(v) for v in range(10) if v != ids["qr"]))
    _, out, _ = run(capsys, "validate", "--graph", edges, "--labels", labels, "--community", comm,
                    "--ql", ids["a1"], "--qr", ids["qr"], "--k1", 3, "--k2", 5)
    assert "contains_query" in json.loads(out)["failed"]


def test_bench_gen_round_trip(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"synthetic_vertices": 300}))
    code, out, _ = run(capsys, "bench-gen", "--config", cfg, "--seed", 4, "--out", tmp_path / "ds")
    assert code == 0
    rec = json.loads(out)
    code, out, _ = run(capsys, "build-index", "--graph", rec["graph"], "--labels", rec["labels"],
                       "--out", tmp_path / "ds.idx")
    assert code == 0 and json.loads(out)["vertices"] == rec["vertices"]


def test_bench_run_zero_queries(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"synthetic_vertices": 300, "num_queries": 0, "sweep_queries": 0}))
    code, out, _ = run(capsys, "bench-run", "--config", cfg, "--out", tmp_path / "o")
    assert code == 0
    lines = (tmp_path / "o" / "queries.csv").read_text().splitlines()
    assert len(lines) == 1 and lines[0].startswith("query,")


def test_bench_run_b_sweep(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"synthetic_vertices": 500, "num_queries": 2, "sweep_queries": 3,
                               "sweep_k": [1], "sweep_b": [1, 2, 3]}))
    code, out, _ = run(capsys, "bench-run", "--config", cfg, "--seed", 1, "--out", tmp_path / "o")
    assert code == 0
    with open(tmp_path / "o" / "sweeps.csv") as fh:
        rows = [r for r in csv.DictReader(fh) if r["sweep"] == "b"]
    for s in ("basic", "fast"):
        assert [r["value"] for r in rows if r["strategy"] == s] == ["1", "2", "3"]


def test_bench_run_rejects_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"speed": "fast"}))
    code, _, err = run(capsys, "bench-run", "--config", cfg, "--out", tmp_path / "o")
    assert code == 2 and "speed" in err


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "fastbcc", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("build-index", "query", "validate", "bench-gen", "bench-run"):
        assert cmd in out.stdout
