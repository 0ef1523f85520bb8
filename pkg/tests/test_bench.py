import itertools
import json
import random

import numpy as np
import pytest

from fastbcc import bench
from fastbcc.bench import (BenchConfig, GroundTruth, RawGraph, f1, generate_queries, load_config,
                           planted_communities, run_benchmark, summarize, synthesize_dataset)
from fastbcc.engine import Strategy
from fastbcc.index import build_index


@pytest.fixture(scope="module")
def planted():
    return planted_communities(600, 20, 40, seed=3)


def edge_set(g):
    return {tuple(e) for e in g.edges().tolist()}


def test_zero_ratios_keep_edges(planted):
    raw, truth = planted
    ds = synthesize_dataset(raw, truth, BenchConfig(cross_edge_ratio=0, noise_edge_ratio=0))
    assert edge_set(ds.graph) == {tuple(e) for e in raw.edges.tolist()}
    assert sum(ds.cross_added) == 0 and ds.noise_added == 0


def test_synthesis_deterministic(planted):
    raw, truth = planted
    a = synthesize_dataset(raw, truth, BenchConfig(rng_seed=11))
    b = synthesize_dataset(raw, truth, BenchConfig(rng_seed=11))
    c = synthesize_dataset(raw, truth, BenchConfig(rng_seed=12))
    assert np.array_equal(a.graph.indices, b.graph.indices) and np.array_equal(a.graph.labels, b.graph.labels)
    assert not np.array_equal(a.graph.labels, c.graph.labels)


def test_cross_edge_count_per_community():
    rng = random.Random(0)
    members = list(range(20))
    pairs = rng.sample(list(itertools.combinations(members, 2)), 100)
    raw = RawGraph(30, np.array(pairs + [(20, 21), (22, 23)]))
    truth = GroundTruth([members, list(range(20, 30))])
    ds = synthesize_dataset(raw, truth, BenchConfig(cross_edge_ratio=0.1, noise_edge_ratio=0.0, rng_seed=4))
    assert ds.cross_added[0] == 10
    # audit: new edges inside the community all join its two label sides
    new = edge_set(ds.graph) - set(pairs)
    inside = [e for e in new if e[0] < 20 and e[1] < 20]
    assert len(inside) == 10
    lab = ds.graph.labels
    assert all(lab[u] != lab[v] for u, v in inside)
    # 2 edges * 0.1 rounds to 0
    assert ds.cross_added[1] == 0


def test_noise_edges_are_heterogeneous(planted):
    raw, truth = planted
    ds = synthesize_dataset(raw, truth, BenchConfig(cross_edge_ratio=0, noise_edge_ratio=0.1))
    assert ds.noise_added == int(np.floor(0.1 * len(raw.edges) + 0.5))
    new = edge_set(ds.graph) - {tuple(e) for e in raw.edges.tolist()}
    assert len(new) == ds.noise_added
    assert all(ds.graph.labels[u] != ds.graph.labels[v] for u, v in new)


def test_empty_ground_truth_rejected():
    with pytest.raises(ValueError):
        GroundTruth([])


def test_config_validation(tmp_path):
    with pytest.raises(ValueError):
        BenchConfig(cross_edge_ratio=1.5)
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"num_queries": 5, "rng_seed": 2}))
    cfg = load_config(p)
    assert cfg.num_queries == 5 and cfg.rng_seed == 2
    p.write_text(json.dumps({"num_queries": 5, "nonsense": 1}))
    with pytest.raises(ValueError, match="nonsense"):
        load_config(p)


@pytest.fixture(scope="module")
def small():
    cfg = BenchConfig(synthetic_vertices=1500, rng_seed=9)
    ds = bench.build_dataset(cfg)
    return cfg, ds, build_index(ds.graph)


def test_generate_queries_constraints(small):
    _, ds, idx = small
    g = ds.graph
    qs = generate_queries(g, idx, 200, seed=1, truth=ds.truth)
    for q in qs:
        assert g.labels[q.q_l] == 0 and g.labels[q.q_r] == 1
        assert (q.k1, q.k2, q.b) == (idx.delta[q.q_l], idx.delta[q.q_r], 1)
        assert idx.delta[q.q_l] >= 1 and idx.delta[q.q_r] >= 1
        assert ds.truth.shared(q.q_l, q.q_r) is not None
    assert qs == generate_queries(g, idx, 200, seed=1, truth=ds.truth)
    assert qs != generate_queries(g, idx, 200, seed=2, truth=ds.truth)


def test_generate_queries_fixed_left(small):
    _, ds, idx = small
    ql = next(v for v in range(ds.graph.n) if ds.graph.labels[v] == 0 and idx.delta[v] >= 1)
    qs = generate_queries(ds.graph, idx, 20, truth=ds.truth, fixed_ql=ql)
    assert {q.q_l for q in qs} == {ql}


def test_generate_queries_clique_pair(clique_pair):
    g, idx, ids = clique_pair
    (q,) = generate_queries(g, idx, 1)
    assert g.labels[q.q_l] != g.labels[q.q_r]
    assert (q.k1, q.k2, q.b) == (idx.delta[q.q_l], idx.delta[q.q_r], 1)


def test_generate_queries_without_pairs():
    from fastbcc.graph import LabeledGraph
    g = LabeledGraph.from_edges([(0, 1)], {0: "A", 1: "A"}, alphabet=("A", "B"))
    with pytest.raises(ValueError):
        generate_queries(g, build_index(g), 3)


def test_f1_cases():
    assert f1(range(10), range(10)) == 1.0
    assert f1([1, 2], [3, 4]) == 0.0
    assert f1([], [1]) == 0.0
    assert f1(range(10), range(5, 15)) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        f1([1], [])


def test_run_benchmark_no_queries(small):
    cfg, ds, idx = small
    rep = run_benchmark(ds.graph, idx, [], cfg)
    assert rep.rows == [] and rep.summary == []


def test_basic_vs_basic_speedup_is_one(small):
    cfg, ds, idx = small
    qs = generate_queries(ds.graph, idx, 5, truth=ds.truth)
    rep = run_benchmark(ds.graph, idx, qs, cfg, ds.truth, strategies=["basic"])
    assert rep.by_strategy("basic")["speedup"] == 1.0
    rows = rep.rows
    assert summarize(rows, ["basic", "basic"])[1]["speedup"] == 1.0


def test_run_benchmark_rows(small):
    cfg, ds, idx = small
    qs = generate_queries(ds.graph, idx, 10, truth=ds.truth)
    rep = run_benchmark(ds.graph, idx, qs, cfg, ds.truth, validate=True)
    assert len(rep.rows) == 20
    assert [r["strategy"] for r in rep.rows[:2]] == ["basic", "fast"]
    for r in rep.rows:
        assert set(bench.ROW_FIELDS) <= set(r)
        assert 0.0 <= r["f1"] <= 1.0
        if r["found"]:
            assert r["valid"] == 1
    assert {s["strategy"] for s in rep.summary} == {Strategy.BASIC.value, Strategy.FAST.value}


def test_pipeline_writes_csvs(tmp_path):
    cfg = BenchConfig(synthetic_vertices=800, num_queries=4, sweep_queries=3, sweep_b=[1, 2], rng_seed=1)
    out = bench.run_pipeline(cfg, tmp_path)
    lines = (tmp_path / "queries.csv").read_text().splitlines()
    assert len(lines) == 1 + 8
    sweeps = out["sweeps"]
    assert [(r["value"], r["strategy"]) for r in sweeps if r["sweep"] == "b"] == \
        [(1, "basic"), (1, "fast"), (2, "basic"), (2, "fast")]
