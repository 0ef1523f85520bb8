"""Butterfly-core community queries.

A query runs in four phases:

1. *expand*: take a shortest path between the two query vertices and grow it
   breadth-first through vertices whose coreness reaches the minimum coreness
   of the path vertices on the same side, until more than ``eta`` vertices
   are collected (this is ``G_0``);
2. *extract*: peel each side of ``G_0`` to its ``k1``/``k2``-core, keep the
   component holding both query vertices and pick a leader per side;
3. *reduce*: repeatedly delete every vertex at the largest query distance,
   restore the core/connectivity/leader conditions and record a snapshot;
4. return the snapshot with the smallest query distance.

Two strategies share this skeleton and differ in phase 3:

``basic``
    recomputes query distances from the parent graph on every round and
    keeps exact butterfly degrees for the whole cross bipartite so that the
    leader can always be the argmax;
``fast``
    maintains distances with one BFS per query vertex over the pruned
    candidate graph (BQDC) and re-selects leaders with FILVM, which only
    evaluates the butterfly degree of candidates in comprehensive-score order.
"""
from __future__ import annotations

import enum
import time
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import networkx as nx
import numpy as np

from .graph import LabeledGraph, bfs_distances, shortest_path
from .index import GraphIndex

DEFAULT_ETA = 1000


class Strategy(str, enum.Enum):
    BASIC = "basic"
    FAST = "fast"


class NoCommunity(Exception):
    """No butterfly-core community exists for the query; ``reason`` is a short code.

    Codes: ``invalid-query``, ``no-path``, ``criterion-2`` / ``criterion-3``
    (a query vertex falls out of its side's core), ``criterion-4`` (no vertex
    with enough butterflies on some side), ``connectivity`` and ``timeout``.
    """

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}: {detail}" if detail else reason)


@dataclass(frozen=True)
class BccQuery:
    q_l: int
    q_r: int
    k1: int
    k2: int
    b: int = 1
    eta: int = DEFAULT_ETA
    strategy: Strategy = Strategy.FAST

    def __post_init__(self):
        object.__setattr__(self, "strategy", Strategy(self.strategy))
        if self.b < 1:
            raise ValueError("b must be at least 1")
        if self.k1 < 0 or self.k2 < 0 or self.eta < 1:
            raise ValueError("k1, k2 must be non-negative and eta positive")

    def check(self, g: LabeledGraph):
        for v in (self.q_l, self.q_r):
            if not 0 <= v < g.n:
                raise NoCommunity("invalid-query", f"vertex {v} not in graph")
        if g.labels_list[self.q_l] == g.labels_list[self.q_r]:
            raise NoCommunity("invalid-query", "query vertices carry the same label")


@dataclass
class BccResult:
    query: BccQuery
    community: np.ndarray
    leaders: tuple = ((-1, 0), (-1, 0))
    query_distance: int = -1
    initial_distance: int = -1
    iterations: int = 0
    valid: bool = False
    reason: str = ""
    failed: tuple = ()
    g0_size: int = 0
    timings: dict = field(default_factory=dict)
    counters: dict = field(default_factory=dict)

    @property
    def found(self) -> bool:
        return len(self.community) > 0


class Timer:
    __slots__ = ("totals",)

    def __init__(self):
        self.totals = {k: 0.0 for k in ("expand", "extract", "reduce", "distance", "leader")}

    def add(self, key, t0):
        self.totals[key] += time.perf_counter() - t0


class CandidateGraph:
    """Mutable working subgraph of one query.

    Vertices are renumbered locally (``verts[i]`` is the parent id of local
    vertex ``i``).  Adjacency is split into same-label (``hom``) and
    cross-label (``cross``) neighbour sets; deleting a vertex removes it from
    its neighbours' sets, so the sets always describe the induced subgraph on
    the active vertices.  ``active`` is a one-byte-per-vertex bitset over
    ``G_0`` and doubles as the snapshot format.
    """

    def __init__(self, g: LabeledGraph, index: GraphIndex, vertices, query: BccQuery):
        self.g = g
        self.index = index
        self.query = query
        self.verts = sorted(vertices)
        self.local = {v: i for i, v in enumerate(self.verts)}
        lab = g.labels_list
        local = self.local
        n = len(self.verts)
        self.side = [lab[v] for v in self.verts]
        self.hom = [set() for _ in range(n)]
        self.cross = [set() for _ in range(n)]
        for i, v in enumerate(self.verts):
            lv = lab[v]
            hi, ci = self.hom[i], self.cross[i]
            for w in g.adj[v]:
                j = local.get(w)
                if j is not None:
                    if lab[w] == lv:
                        hi.add(j)
                    else:
                        ci.add(j)
        self.active = bytearray(b"\x01") * n
        self.size = n
        self.ql = local[query.q_l]
        self.qr = local[query.q_r]
        self.left = self.side[self.ql]
        self.k = {self.left: query.k1, 1 - self.left: query.k2}
        self.qv = {self.left: self.ql, 1 - self.left: self.qr}
        self.leaders = {0: None, 1: None}
        self.leader_chi = {0: 0, 1: 0}
        self.chi = None  # exact butterfly degrees, maintained by the basic strategy only
        self.dirty = None
        self.timer = Timer()
        self.counters = {"leader_updates": 0, "butterfly_evals": 0, "rounds": 0}

    @property
    def track_butterflies(self) -> bool:
        return self.chi is not None

    def active_vertices(self) -> list[int]:
        return [v for v, a in zip(self.verts, self.active) if a]

    def vertices_of(self, snapshot: bytes) -> np.ndarray:
        return np.array([v for v, a in zip(self.verts, snapshot) if a], dtype=np.int64)

    def remove(self, i: int):
        if self.dirty is not None:
            d = self.dirty
            d.add(i)
            d.update(self.cross[i])
            for u in self.cross[i]:
                d.update(self.cross[u])
        self.active[i] = 0
        self.size -= 1
        for u in self.hom[i]:
            self.hom[u].discard(i)
        for u in self.cross[i]:
            self.cross[u].discard(i)

    def local_chi(self, i: int) -> int:
        """Butterfly degree of local vertex ``i`` in the current cross bipartite."""
        self.counters["butterfly_evals"] += 1
        ci = self.cross[i]
        if len(ci) < 2:
            return 0
        cross = self.cross
        common = {}
        for u in ci:
            for w in cross[u]:
                common[w] = common.get(w, 0) + 1
        del common[i]
        return sum(c * (c - 1) // 2 for c in common.values() if c > 1)

    @cached_property
    def vsc_order(self) -> dict:
        """Local vertices with a comprehensive score, per side, best score first."""
        vsc = self.index.vsc_list
        order = {0: [], 1: []}
        keyed = sorted((-vsc[v], v, i) for i, v in enumerate(self.verts) if vsc[v] == vsc[v])
        for _, _, i in keyed:
            order[self.side[i]].append(i)
        return order


# -- phase 1: local expansion -----------------------------------------------------

def local_expand(g: LabeledGraph, index: GraphIndex, query: BccQuery) -> CandidateGraph:
    query.check(g)
    path = shortest_path(g, query.q_l, query.q_r)
    if path is None:
        raise NoCommunity("no-path", "query vertices are disconnected")
    lab = g.labels_list
    delta = index.delta_list
    kmin = {0: float("inf"), 1: float("inf")}
    for v in path:
        kmin[lab[v]] = min(kmin[lab[v]], delta[v])
    adj = g.adj
    members = set(path)
    frontier = path
    while len(members) <= query.eta and frontier:
        layer = []
        for v in frontier:
            for w in adj[v]:
                if w not in members and delta[w] >= kmin[lab[w]]:
                    members.add(w)
                    layer.append(w)
        frontier = layer
    return CandidateGraph(g, index, members, query)


# -- phase 2: extraction ------------------------------------------------------------

def _peel(cand: CandidateGraph, seeds) -> None:
    hom, k, side, active = cand.hom, cand.k, cand.side, cand.active
    stack = [i for i in seeds if active[i] and len(hom[i]) < k[side[i]]]
    while stack:
        i = stack.pop()
        if not active[i]:
            continue
        if i == cand.ql or i == cand.qr:
            crit = "criterion-2" if side[i] == cand.left else "criterion-3"
            raise NoCommunity(crit, f"query vertex {cand.verts[i]} leaves the {k[side[i]]}-core")
        nbrs = list(hom[i])
        cand.remove(i)
        for u in nbrs:
            if len(hom[u]) < k[side[u]]:
                stack.append(u)


def _keep_query_component(cand: CandidateGraph) -> None:
    hom, cross = cand.hom, cand.cross
    seen = {cand.ql}
    queue = deque([cand.ql])
    while queue:
        v = queue.popleft()
        for nbrs in (hom[v], cross[v]):
            for w in nbrs:
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
    if cand.qr not in seen:
        raise NoCommunity("connectivity", "query vertices end up in different components")
    if len(seen) < cand.size:
        active = cand.active
        for i in [i for i in range(len(active)) if active[i] and i not in seen]:
            cand.remove(i)


def _best_by_chi(cand: CandidateGraph, side: int):
    chi, active, sides, verts = cand.chi, cand.active, cand.side, cand.verts
    best, best_key = None, None
    for i, c in chi.items():
        if active[i] and sides[i] == side:
            key = (c, -verts[i])
            if best_key is None or key > best_key:
                best, best_key = i, key
    return best


def _filvm_local(cand: CandidateGraph, side: int) -> tuple[int, int]:
    """FILVM on local ids; returns ``(leader, butterfly degree)``."""
    b = cand.query.b
    q = cand.qv[side]
    cq = cand.local_chi(q)
    if cq >= b:
        return q, cq
    vsc = cand.index.vsc_list
    verts, active, cross = cand.verts, cand.active, cand.cross
    tried = {q}
    for i in sorted(cand.hom[q], key=lambda j: (-vsc[verts[j]], verts[j])):
        tried.add(i)
        if len(cross[i]) >= 2:
            c = cand.local_chi(i)
            if c >= b:
                return i, c
    for i in cand.vsc_order[side]:
        if active[i] and i not in tried and len(cross[i]) >= 2:
            c = cand.local_chi(i)
            if c >= b:
                return i, c
    return q, cq


def _update_leaders(cand: CandidateGraph) -> None:
    """Keep each side's leader while it still qualifies, otherwise pick a new one."""
    t0 = time.perf_counter()
    b = cand.query.b
    track = cand.track_butterflies
    if track:
        chi = cand.chi
        for i in cand.dirty:
            if cand.active[i]:
                chi[i] = cand.local_chi(i)
            else:
                chi.pop(i, None)
        cand.dirty.clear()
    for side in (cand.left, 1 - cand.left):
        cur = cand.leaders[side]
        if cur is not None and cand.active[cur]:
            c = cand.chi.get(cur, 0) if track else cand.local_chi(cur)
            if c >= b:
                cand.leader_chi[side] = c
                continue
        if track:
            new = _best_by_chi(cand, side)
            c = cand.chi[new] if new is not None else 0
        else:
            new, c = _filvm_local(cand, side)
        if cur is not None and new != cur:
            cand.counters["leader_updates"] += 1
        cand.leaders[side] = new
        cand.leader_chi[side] = c
    cand.timer.add("leader", t0)
    for side in (cand.left, 1 - cand.left):
        if cand.leaders[side] is None or cand.leader_chi[side] < b:
            raise NoCommunity("criterion-4", "no vertex with enough butterflies on one side")


def extract_bcc(cand: CandidateGraph) -> CandidateGraph:
    """Reduce ``G_0`` to the maximal connected BCC containing the query, in place."""
    _peel(cand, range(len(cand.verts)))
    _keep_query_component(cand)
    if cand.query.strategy is Strategy.BASIC:
        t0 = time.perf_counter()
        cand.chi = {i: cand.local_chi(i) for i in range(len(cand.verts))
                    if cand.active[i] and cand.cross[i]}
        cand.dirty = set()
        cand.timer.add("leader", t0)
    _update_leaders(cand)
    return cand


# -- distances ------------------------------------------------------------------------

def _bfs_levels(cand: CandidateGraph, src: int) -> list[int]:
    """Level-synchronous BFS over the active candidate graph; -1 marks unreached."""
    hom, cross = cand.hom, cand.cross
    dist = [-1] * len(cand.verts)
    dist[src] = 0
    frontier = [src]
    path = 1
    while frontier:
        nxt = []
        for v in frontier:
            for nbrs in (hom[v], cross[v]):
                for u in nbrs:
                    if dist[u] < 0:
                        dist[u] = path
                        nxt.append(u)
        frontier = nxt
        path += 1
    return dist


def bqdc(cand: CandidateGraph, q: int, removed=()) -> dict[int, int]:
    """Delete ``removed`` from the candidate graph, then BFS once from query vertex ``q``.

    Returns ``{vertex: hops}`` for every reached vertex other than ``q``.
    """
    src = cand.local[q]
    drop = [cand.local[v] for v in removed]
    if src in drop:
        raise ValueError("query vertices cannot be removed")
    for i in drop:
        if cand.active[i]:
            cand.remove(i)
    dist = _bfs_levels(cand, src)
    verts = cand.verts
    return {verts[i]: d for i, d in enumerate(dist) if d > 0}


def _basic_distances(cand: CandidateGraph):
    g, verts, local = cand.g, cand.verts, cand.local
    members = {v for v, a in zip(verts, cand.active) if a}
    out = []
    for q in (cand.ql, cand.qr):
        dist = [-1] * len(verts)
        for v, d in bfs_distances(g, verts[q], members).items():
            dist[local[v]] = d
        out.append(dist)
    return out


def query_distance(cand: CandidateGraph, maps=None) -> dict[int, int | None]:
    """Per active vertex, the larger of its hop distances to the two query vertices.

    ``maps`` are the two BQDC maps; computed when omitted.  Vertices missing
    from either map are reported as ``None`` (unreachable).
    """
    ql, qr = cand.verts[cand.ql], cand.verts[cand.qr]
    if maps is None:
        maps = (bqdc(cand, ql), bqdc(cand, qr))
    ml, mr = dict(maps[0]), dict(maps[1])
    ml[ql] = 0
    mr[qr] = 0
    out = {}
    for v in cand.active_vertices():
        a, b = ml.get(v), mr.get(v)
        out[v] = None if a is None or b is None else max(a, b)
    return out


def filvm(cand: CandidateGraph, q: int, b: int | None = None) -> int:
    """Leader for the side of query vertex ``q`` (parent ids in and out)."""
    if b is not None and b != cand.query.b:
        raise ValueError("b must match the candidate's query")
    side = cand.side[cand.local[q]]
    if cand.local[q] != cand.qv[side]:
        raise ValueError(f"{q} is not a query vertex of this candidate")
    return cand.verts[_filvm_local(cand, side)[0]]


def maintain_bcc(cand: CandidateGraph, batch=()) -> CandidateGraph:
    """Delete ``batch`` (parent ids) and restore the BCC conditions.

    Raises :class:`NoCommunity` when the query vertices are lost,
    disconnected, or a side runs out of leader candidates.
    """
    seeds = set()
    idx = [cand.local[v] for v in batch]
    if cand.ql in idx or cand.qr in idx:
        raise ValueError("query vertices cannot be deleted")
    for i in idx:
        if cand.active[i]:
            seeds.update(cand.hom[i])
            cand.remove(i)
    _peel(cand, seeds)
    _keep_query_component(cand)
    _update_leaders(cand)
    return cand


# -- phase 3 + 4 ---------------------------------------------------------------------

DistanceHook = Callable[[CandidateGraph, dict, dict], None]


def _reduce(cand: CandidateGraph, deadline=None, on_distances: DistanceHook | None = None):
    timer = cand.timer
    fast = cand.query.strategy is Strategy.FAST
    ql, qr, verts = cand.ql, cand.qr, cand.verts
    snapshots = []
    while True:
        if deadline is not None and time.perf_counter() > deadline:
            raise NoCommunity("timeout")
        t0 = time.perf_counter()
        if fast:
            dl, dr = _bfs_levels(cand, ql), _bfs_levels(cand, qr)
        else:
            dl, dr = _basic_distances(cand)
        timer.add("distance", t0)
        if on_distances is not None:
            on_distances(cand, {verts[i]: d for i, d in enumerate(dl) if d > 0},
                         {verts[i]: d for i, d in enumerate(dr) if d > 0})
        active = cand.active
        qd = [max(a, b) if a >= 0 and b >= 0 else -1 for a, b in zip(dl, dr)]
        far = max(d for d, a in zip(qd, active) if a)
        leaders = tuple((verts[cand.leaders[s]], cand.leader_chi[s])
                        for s in (cand.left, 1 - cand.left))
        snapshots.append((far, bytes(active), leaders))
        # deletions never shorten dist(q_l, q_r), and q_l already sits at that distance
        if far <= dl[qr]:
            break
        batch = [verts[i] for i, d in enumerate(qd)
                 if active[i] and i != ql and i != qr and (d == far or d < 0)]
        if not batch:
            break
        cand.counters["rounds"] += 1
        try:
            maintain_bcc(cand, batch)
        except NoCommunity as exc:
            if exc.reason == "timeout":
                raise
            break
    return snapshots


def run_query(g: LabeledGraph, index: GraphIndex, query: BccQuery, *,
              validate: bool = True, timeout: float | None = None,
              on_distances: DistanceHook | None = None) -> BccResult:
    """Answer one query; a missing community is reported through ``reason``, not raised."""
    t_start = time.perf_counter()
    deadline = None if timeout is None else t_start + timeout
    cand = None
    try:
        t0 = time.perf_counter()
        cand = local_expand(g, index, query)
        cand.timer.add("expand", t0)
        t0 = time.perf_counter()
        extract_bcc(cand)
        cand.timer.add("extract", t0)
        t0 = time.perf_counter()
        snapshots = _reduce(cand, deadline, on_distances)
        cand.timer.add("reduce", t0)
    except NoCommunity as exc:
        res = BccResult(query, np.empty(0, dtype=np.int64), reason=exc.reason,
                        g0_size=len(cand.verts) if cand else 0)
        if cand is not None:
            res.timings = dict(cand.timer.totals)
            res.counters = dict(cand.counters)
        res.timings["total"] = float("inf") if exc.reason == "timeout" else time.perf_counter() - t_start
        return res
    total = time.perf_counter() - t_start
    best = min(range(len(snapshots)), key=lambda s: snapshots[s][0])
    far, bits, leaders = snapshots[best]
    res = BccResult(query, cand.vertices_of(bits), leaders, far, snapshots[0][0],
                    iterations=cand.counters["rounds"], g0_size=len(cand.verts))
    res.timings = dict(cand.timer.totals, total=total)
    res.counters = dict(cand.counters, snapshots=len(snapshots))
    if validate:
        report = validate_bcc(g, res.community, query)
        res.valid = report.valid
        res.failed = tuple(report.failed)
        res.reason = "" if report.valid else "validator:" + ",".join(report.failed)
    else:
        res.valid = True
    return res


# -- validator -----------------------------------------------------------------------

@dataclass
class ValidationReport:
    checks: dict
    leaders: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return all(self.checks.values())

    @property
    def failed(self) -> list[str]:
        return [k for k, ok in self.checks.items() if not ok]


CRITERIA = ("labels", "left_core", "right_core", "cross_interaction", "leader",
            "connected", "contains_query")


def validate_bcc(g: LabeledGraph, community, query: BccQuery) -> ValidationReport:
    """Check a vertex set against the butterfly-core community conditions from scratch.

    Builds a networkx graph of the community and recounts butterflies by
    brute force over cross-neighbour pairs, sharing nothing with the engine.
    """
    members = {int(v) for v in community}
    h = nx.Graph()
    h.add_nodes_from(members)
    for v in members:
        for w in g.adj[v]:
            if w in members and v < w:
                h.add_edge(v, w)
    lab = g.labels_list
    checks = dict.fromkeys(CRITERIA, False)
    checks["contains_query"] = query.q_l in members and query.q_r in members
    if not members:
        return ValidationReport(checks)
    left_label = lab[query.q_l] if query.q_l < g.n else 0
    left = {v for v in members if lab[v] == left_label}
    right = members - left
    checks["labels"] = bool(left) and bool(right) and lab[query.q_l] != lab[query.q_r]

    def is_core(vs, k):
        sub = h.subgraph(vs)
        return all(d >= k for _, d in sub.degree())

    checks["left_core"] = bool(left) and is_core(left, query.k1)
    checks["right_core"] = bool(right) and is_core(right, query.k2)
    cross_nbrs = {v: {w for w in h[v] if lab[w] != lab[v]} for v in members}

    def butterflies(v):
        count = 0
        nv = cross_nbrs[v]
        same = {w for u in nv for w in cross_nbrs[u]} - {v}
        for w in same:
            c = len(nv & cross_nbrs[w])
            count += c * (c - 1) // 2
        return count

    best = {}
    for name, side in (("left", left), ("right", right)):
        scored = [(butterflies(v), -v) for v in side if len(cross_nbrs[v]) >= 2]
        best[name] = (-max(scored)[1], max(scored)[0]) if scored else (None, 0)
    has_l = best["left"][1] >= query.b
    has_r = best["right"][1] >= query.b
    checks["cross_interaction"] = has_l and has_r
    checks["leader"] = has_l or has_r
    checks["connected"] = nx.is_connected(h)
    return ValidationReport(checks, best)
