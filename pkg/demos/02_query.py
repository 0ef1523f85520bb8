"""
Answering a query with both strategies
======================================

Generates a planted-community graph, builds the index and runs the same
query with the basic and the fast strategy, then checks the answers with the
stand-alone validator.
"""
from fastbcc import BccQuery, Strategy, build_index, run_query, validate_bcc
from fastbcc import bench

cfg = bench.BenchConfig(synthetic_vertices=3000, rng_seed=1)
ds = bench.build_dataset(cfg)
g = ds.graph
print(f"{g.n} vertices, {g.edge_count} edges, {len(ds.truth.communities)} communities")

idx = build_index(g)
print("butterflies:", idx.butterflies.total_butterflies)

# one query pair drawn from a ground-truth community; k1, k2 are the
# endpoints' coreness and b = 1
q = bench.generate_queries(g, idx, 1, seed=3, truth=ds.truth)[0]
print("query", q.q_l, q.q_r, "k1 =", q.k1, "k2 =", q.k2)

target = ds.truth.communities[ds.truth.shared(q.q_l, q.q_r)]
for s in Strategy:
    res = run_query(g, idx, BccQuery(q.q_l, q.q_r, q.k1, q.k2, strategy=s))
    if not res.found:
        print(s.value, "no community:", res.reason)
        continue
    t = res.timings
    print(f"{s.value:5s} size={len(res.community)} G0={res.g0_size} "
          f"distance {res.initial_distance}->{res.query_distance} rounds={res.iterations} "
          f"f1={bench.f1(res.community, target):.3f} "
          f"total={t['total'] * 1e3:.1f}ms distance={t['distance'] * 1e3:.1f}ms leader={t['leader'] * 1e3:.1f}ms")
    rep = validate_bcc(g, res.community, res.query)
    print("      checks:", rep.checks, "leaders:", rep.leaders)

# a stricter leader requirement: five butterflies per leader
hard = run_query(g, idx, BccQuery(q.q_l, q.q_r, q.k1, q.k2, b=5))
print("b=5:", hard.reason or "found")
