"""
Offline index on a small labelled graph
=======================================

Builds the per-vertex index (coreness, butterfly degree, walk scores) for a
toy graph and shows what each array holds.
"""
import itertools
import os
import tempfile

import numpy as np

from fastbcc import LabeledGraph, build_index, load_index, persist_index

# Two groups: a 4-clique labelled "SN" and a 6-clique labelled "NLP".
# Vertices 0,1 (SN) and 4,5 (NLP) are fully cross-connected: one butterfly.
left, right = range(0, 4), range(4, 10)
edges = list(itertools.combinations(left, 2)) + list(itertools.combinations(right, 2))
edges += [(0, 4), (0, 5), (1, 4), (1, 5)]
labels = {v: "SN" if v < 4 else "NLP" for v in range(10)}
g = LabeledGraph.from_edges(edges, labels)
print(g)

idx = build_index(g)

# coreness only counts same-label edges: K4 gives 3, K6 gives 5
print("delta", idx.delta)

# butterfly degree: each vertex of the 2x2 biclique sits in exactly one butterfly
print("chi  ", idx.chi, "total", idx.butterflies.total_butterflies)

# RS is the mean walk score a vertex receives; RSN/BSN are min-max scaled,
# VSC mixes them 50/50 and orders leader candidates
np.set_printoptions(precision=3, suppress=True)
print("rsn  ", idx.scores.rsn)
print("bsn  ", idx.scores.bsn)
print("vsc  ", idx.vsc)

# The index file is deterministic, so two builds are byte-identical
with tempfile.TemporaryDirectory() as tmp:
    a, b = os.path.join(tmp, "a.idx"), os.path.join(tmp, "b.idx")
    persist_index(idx, a)
    persist_index(build_index(g), b)
    print("identical files:", open(a, "rb").read() == open(b, "rb").read())
    back = load_index(a, g)  # refuses an index built for another graph
    print("reloaded vsc matches:", np.array_equal(back.vsc, idx.vsc))
