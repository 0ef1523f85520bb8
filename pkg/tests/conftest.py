import itertools
import random

import numpy as np
import pytest

from fastbcc.graph import LabeledGraph
from fastbcc.index import build_index


def clique_pair_graph():
    """Left side K4 (a1..a4), right side K6 (qr, b1..b5), one butterfly a1,a2 x qr,b1."""
    left = ["a1", "a2", "a3", "a4"]
    right = ["qr", "b1", "b2", "b3", "b4", "b5"]
    edges = list(itertools.combinations(left, 2)) + list(itertools.combinations(right, 2))
    edges += [("a1", "qr"), ("a1", "b1"), ("a2", "qr"), ("a2", "b1")]
    names = left + right
    ids = {v: i for i, v in enumerate(names)}
    labels = {ids[v]: ("SN" if v in left else "NLP") for v in names}
    g = LabeledGraph.from_edges([(ids[u], ids[v]) for u, v in edges], labels)
    return g, ids


@pytest.fixture
def clique_pair():
    g, ids = clique_pair_graph()
    return g, build_index(g), ids


def random_labeled_graph(n, p, seed, p_label=0.5):
    rng = random.Random(seed)
    labels = {v: ("A" if rng.random() < p_label else "B") for v in range(n)}
    labels[0], labels[1] = "A", "B"
    edges = [(u, v) for u, v in itertools.combinations(range(n), 2) if rng.random() < p]
    return LabeledGraph.from_edges(edges, labels)


def random_bipartite(n_left, n_right, m, seed):
    """Labeled graph whose edges all join the two labels."""
    rng = random.Random(seed)
    pairs = [(u, n_left + v) for u in range(n_left) for v in range(n_right)]
    edges = rng.sample(pairs, min(m, len(pairs)))
    labels = {v: ("L" if v < n_left else "R") for v in range(n_left + n_right)}
    return LabeledGraph.from_edges(edges, labels)


def brute_force_butterflies(g):
    """chi by enumerating every 4-vertex subset (2 per label) and testing for a biclique."""
    chi = np.zeros(g.n, dtype=np.int64)
    left = [v for v in range(g.n) if g.labels_list[v] == 0]
    right = [v for v in range(g.n) if g.labels_list[v] == 1]
    adj = [set(a) for a in g.adj]
    for l1, l2 in itertools.combinations(left, 2):
        common = adj[l1] & adj[l2]
        for r1, r2 in itertools.combinations(right, 2):
            if r1 in common and r2 in common:
                for v in (l1, l2, r1, r2):
                    chi[v] += 1
    return chi


def peeling_oracle(adj_sets):
    """Coreness by repeatedly deleting a minimum-degree vertex and tracking the running max."""
    adj = {v: set(ns) for v, ns in adj_sets.items()}
    core = {}
    k = 0
    while adj:
        v = min(adj, key=lambda x: (len(adj[x]), x))
        k = max(k, len(adj[v]))
        core[v] = k
        for u in adj[v]:
            adj[u].discard(v)
        del adj[v]
    return core
