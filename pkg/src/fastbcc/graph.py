"""Immutable two-label graph, file ingestion and basic traversals.

Vertices are stored under dense internal ids ``0..n-1``; the external ids
seen in input files are kept in :attr:`LabeledGraph.ext_ids` and
:attr:`LabeledGraph.id_map`.  Neighbour lists are sorted so that traversal
order (and therefore every tie-break downstream) is deterministic.
"""
from __future__ import annotations

import enum
import os
from collections import deque
from typing import Iterable, Mapping

import numpy as np


class GraphFormatError(ValueError):
    """Raised for malformed edge or label files."""


class MissingLabelError(ValueError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        shown = ", ".join(str(m) for m in self.missing[:20])
        more = "" if len(self.missing) <= 20 else f" (+{len(self.missing) - 20} more)"
        super().__init__(f"{len(self.missing)} vertices have no label: {shown}{more}")


class EdgeKind(enum.Enum):
    HOMOGENEOUS = "homogeneous"
    HETEROGENEOUS = "heterogeneous"


class LabeledGraph:
    """Undirected simple graph with exactly two vertex labels.

    Use :meth:`from_edges` (external ids) or :meth:`from_arrays` (internal
    ids, vectorised) rather than calling the constructor directly.
    """

    def __init__(self, indptr, indices, labels, alphabet, ext_ids=None):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.labels = np.asarray(labels, dtype=np.int8)
        self.alphabet = tuple(alphabet)
        if len(self.alphabet) != 2 or self.alphabet[0] == self.alphabet[1]:
            raise ValueError(f"expected exactly two distinct labels, got {self.alphabet!r}")
        self.n = len(self.labels)
        if len(self.indptr) != self.n + 1:
            raise ValueError("indptr length does not match label count")
        self.edge_count = len(self.indices) // 2
        self.ext_ids = list(range(self.n)) if ext_ids is None else list(ext_ids)
        self.id_map = {e: i for i, e in enumerate(self.ext_ids)}
        if len(self.id_map) != self.n:
            raise ValueError("external ids are not unique")
        flat = self.indices.tolist()
        bounds = self.indptr.tolist()
        self.adj = [flat[bounds[v]:bounds[v + 1]] for v in range(self.n)]
        self.labels_list = self.labels.tolist()
        self.indptr.flags.writeable = False
        self.indices.flags.writeable = False
        self.labels.flags.writeable = False

    # -- construction -------------------------------------------------------

    @classmethod
    def from_arrays(cls, n, src, dst, labels, alphabet=("A", "B"), ext_ids=None):
        """Build from internal-id edge arrays; self-loops and duplicates dropped."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        if len(src) != len(dst):
            raise ValueError("src and dst differ in length")
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise ValueError("edge endpoint out of range")
        keep = src != dst
        lo = np.minimum(src[keep], dst[keep])
        hi = np.maximum(src[keep], dst[keep])
        key = np.unique(lo * n + hi)
        lo, hi = key // n, key % n
        heads = np.concatenate([lo, hi])
        tails = np.concatenate([hi, lo])
        order = np.lexsort((tails, heads))
        heads, tails = heads[order], tails[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(heads, minlength=n), out=indptr[1:])
        return cls(indptr, tails, labels, alphabet, ext_ids)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], labels: Mapping, alphabet=None):
        """Build from external-id edges and an ``ext_id -> label`` mapping.

        Every endpoint needs a label.  Labelled vertices that appear in no
        edge are kept as isolated vertices.
        """
        edges = [(u, w) for u, w in edges]
        seen = set(labels)
        for u, w in edges:
            seen.add(u)
            seen.add(w)
        missing = [v for v in seen if v not in labels]
        if missing:
            raise MissingLabelError(missing)
        ext_ids = sorted(seen, key=_id_sort_key)
        if alphabet is None:
            alphabet = sorted({labels[v] for v in ext_ids}, key=str)
        alphabet = tuple(alphabet)
        if len(alphabet) != 2:
            raise ValueError(f"expected exactly two labels, found {len(alphabet)}: {alphabet!r}")
        code = {a: i for i, a in enumerate(alphabet)}
        try:
            lab = [code[labels[v]] for v in ext_ids]
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} not in alphabet {alphabet!r}") from None
        id_map = {e: i for i, e in enumerate(ext_ids)}
        src = np.fromiter((id_map[u] for u, _ in edges), dtype=np.int64, count=len(edges))
        dst = np.fromiter((id_map[w] for _, w in edges), dtype=np.int64, count=len(edges))
        return cls.from_arrays(len(ext_ids), src, dst, lab, alphabet, ext_ids)

    # -- accessors ----------------------------------------------------------

    def neighbors(self, v: int) -> list[int]:
        return self.adj[v]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def label(self, v: int):
        return self.alphabet[self.labels_list[v]]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.indices[self.indptr[u]:self.indptr[u + 1]]
        i = np.searchsorted(row, v)
        return bool(i < len(row) and row[i] == v)

    def edge_kind(self, u: int, v: int) -> EdgeKind:
        if self.labels_list[u] != self.labels_list[v]:
            return EdgeKind.HETEROGENEOUS
        return EdgeKind.HOMOGENEOUS

    def edges(self) -> np.ndarray:
        """``(m, 2)`` array of edges with ``u < v``, sorted."""
        heads = np.repeat(np.arange(self.n), np.diff(self.indptr))
        mask = heads < self.indices
        return np.column_stack([heads[mask], self.indices[mask]])

    def side(self, code: int) -> np.ndarray:
        """Internal ids of all vertices carrying label ``code`` (0 or 1)."""
        return np.flatnonzero(self.labels == code)

    def internal(self, ext) -> int:
        try:
            return self.id_map[ext]
        except KeyError:
            raise KeyError(f"unknown vertex id {ext!r}") from None

    def __repr__(self):
        return f"LabeledGraph(n={self.n}, m={self.edge_count}, labels={self.alphabet})"


def _id_sort_key(v):
    return (0, v, "") if isinstance(v, (int, np.integer)) else (1, 0, str(v))


# -- ingestion ---------------------------------------------------------------

def _parse_id(tok: str, path, lineno: int):
    try:
        value = int(tok)
    except ValueError:
        raise GraphFormatError(f"{path}:{lineno}: vertex id {tok!r} is not an integer") from None
    if value < 0:
        raise GraphFormatError(f"{path}:{lineno}: negative vertex id {value}")
    return value


def read_edge_list(path) -> list[tuple[int, int]]:
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphFormatError(f"{path}:{lineno}: expected 2 fields, got {len(parts)}")
            edges.append((_parse_id(parts[0], path, lineno), _parse_id(parts[1], path, lineno)))
    return edges


def load_labels(path) -> dict[int, str]:
    """Read an ``id label`` file."""
    labels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise GraphFormatError(f"{path}:{lineno}: expected 'id label', got {line!r}")
            labels[_parse_id(parts[0], path, lineno)] = parts[1]
    return labels


def load_edge_list(path, label_source, alphabet=None) -> LabeledGraph:
    """Load a SNAP-style edge list.

    ``label_source`` is a label file path, a mapping ``ext_id -> label`` or a
    callable assignment rule applied to every endpoint.
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"edge list not found: {path}")
    edges = read_edge_list(path)
    if isinstance(label_source, (str, os.PathLike)):
        if not os.path.exists(label_source):
            raise FileNotFoundError(f"label file not found: {label_source}")
        labels = load_labels(label_source)
    elif callable(label_source):
        ids = {v for e in edges for v in e}
        labels = {v: label_source(v) for v in ids}
    else:
        labels = dict(label_source)
    return LabeledGraph.from_edges(edges, labels, alphabet=alphabet)


def write_edge_list(g: LabeledGraph, path, header: str | None = None):
    ext = g.ext_ids
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for u, v in g.edges().tolist():
            fh.write(f"{ext[u]}\t{ext[v]}\n")


def write_labels(g: LabeledGraph, path):
    with open(path, "w", encoding="utf-8") as fh:
        for v in range(g.n):
            fh.write(f"{g.ext_ids[v]}\t{g.label(v)}\n")


# -- traversals --------------------------------------------------------------

def _as_member_set(g: LabeledGraph, active):
    if active is None or isinstance(active, (set, frozenset)):
        return active
    if isinstance(active, np.ndarray) and active.dtype == bool:
        return set(np.flatnonzero(active).tolist())
    return set(active)


def bfs_distances(g: LabeledGraph, source: int, active=None) -> dict[int, int]:
    """Hop distances from ``source`` inside the vertex set ``active``.

    ``active`` may be ``None`` (whole graph), a set of internal ids or a
    boolean mask.  Unreachable vertices are absent from the result.
    """
    active = _as_member_set(g, active)
    if active is not None and source not in active:
        raise ValueError(f"source {source} is not in the active vertex set")
    adj = g.adj
    dist = {source: 0}
    queue = deque([source])
    while queue:
        v = queue.popleft()
        d = dist[v] + 1
        for w in adj[v]:
            if w not in dist and (active is None or w in active):
                dist[w] = d
                queue.append(w)
    return dist


def shortest_path(g: LabeledGraph, u: int, v: int, active=None) -> list[int] | None:
    """Minimum-hop path ``[u, ..., v]``, or ``None`` when no path exists.

    Neighbours are expanded in increasing id order, so the returned path is
    deterministic.
    """
    if u == v:
        raise ValueError("shortest_path needs two distinct vertices")
    active = _as_member_set(g, active)
    if active is not None and (u not in active or v not in active):
        return None
    adj = g.adj
    parent = {u: -1}
    queue = deque([u])
    while queue:
        x = queue.popleft()
        for w in adj[x]:
            if w in parent or (active is not None and w not in active):
                continue
            parent[w] = x
            if w == v:
                path = [v]
                while parent[path[-1]] != -1:
                    path.append(parent[path[-1]])
                return path[::-1]
            queue.append(w)
    return None


class SubgraphView:
    """Induced subgraph realised as a vertex mask over its parent graph."""

    def __init__(self, graph: LabeledGraph, mask: np.ndarray):
        self.graph = graph
        self.mask = mask

    @property
    def n(self) -> int:
        return int(self.mask.sum())

    def vertices(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __contains__(self, v) -> bool:
        return bool(0 <= v < len(self.mask) and self.mask[v])

    def neighbors(self, v: int) -> list[int]:
        m = self.mask
        return [w for w in self.graph.adj[v] if m[w]]

    def degree(self, v: int) -> int:
        return len(self.neighbors(v))

    def edges(self) -> np.ndarray:
        e = self.graph.edges()
        return e[self.mask[e[:, 0]] & self.mask[e[:, 1]]]

    @property
    def edge_count(self) -> int:
        return len(self.edges())

    def label(self, v: int):
        return self.graph.label(v)

    def remove(self, vs: Iterable[int]):
        """Clear vertices from the view in place."""
        self.mask[list(vs)] = False


def induced_subgraph(g: LabeledGraph, vs: Iterable[int]) -> SubgraphView:
    mask = np.zeros(g.n, dtype=bool)
    vs = np.fromiter(vs, dtype=np.int64) if not isinstance(vs, np.ndarray) else vs
    if len(vs):
        mask[vs] = True
    return SubgraphView(g, mask)


def to_networkx(g: LabeledGraph, vs=None):
    """Plain ``networkx.Graph`` copy (optionally induced on ``vs``), with a ``label`` attribute."""
    import networkx as nx

    h = nx.Graph()
    nodes = range(g.n) if vs is None else vs
    keep = set(nodes)
    h.add_nodes_from((v, {"label": g.labels_list[v]}) for v in keep)
    for u, w in g.edges().tolist():
        if u in keep and w in keep:
            h.add_edge(u, w)
    return h
