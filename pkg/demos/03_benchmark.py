"""
Small head-to-head benchmark
============================

Runs a handful of generated queries with both strategies and prints the
summary table (mean runtime, speedup over basic, F1, phase costs), then a
short sweep over k.  Pass a vertex count to scale it up:

    python3 demos/03_benchmark.py 100000
"""
import sys

from fastbcc import bench, build_index

n = int(sys.argv[1]) if len(sys.argv) > 1 else 10_000
cfg = bench.BenchConfig(synthetic_vertices=n, rng_seed=0, num_queries=100, sweep_queries=30)
ds = bench.build_dataset(cfg)
idx = build_index(ds.graph, cfg.rwr)
print(f"{ds.graph.n} vertices, {ds.graph.edge_count} edges")

queries = bench.generate_queries(ds.graph, idx, cfg.num_queries, cfg.rng_seed, ds.truth)
rep = bench.run_benchmark(ds.graph, idx, queries, cfg, ds.truth)

cols = ["strategy", "found", "mean_runtime", "speedup", "mean_f1", "distance_time", "leader_time",
        "leader_updates", "butterfly_evals"]
print(" ".join(f"{c:>15s}" for c in cols))
for row in rep.summary:
    print(" ".join(f"{row[c]:>15.4f}" if isinstance(row[c], float) else f"{row[c]:>15}" for c in cols))

# larger k means smaller candidate graphs, so queries should get cheaper
for k in bench.attainable_k(idx, ds.graph, ds.truth):
    qs = bench.generate_queries(ds.graph, idx, cfg.sweep_queries, 1, ds.truth, k=k)
    summ = bench.run_benchmark(ds.graph, idx, qs, cfg, ds.truth).summary
    print(f"k={k}: " + ", ".join(f"{s['strategy']} {s['mean_runtime'] * 1e3:.1f} ms" for s in summ))
