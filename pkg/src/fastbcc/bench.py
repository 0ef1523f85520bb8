"""Benchmark harness: labelled datasets from ground-truth communities, query
generation, F1 scoring, strategy comparison and parameter sweeps."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .engine import BccQuery, BccResult, DEFAULT_ETA, Strategy, run_query
from .graph import GraphFormatError, LabeledGraph
from .index import GraphIndex, RwrParams, build_index

log = logging.getLogger(__name__)


@dataclass
class BenchConfig:
    cross_edge_ratio: float = 0.10
    noise_edge_ratio: float = 0.10
    num_queries: int = 1000
    timeout: float = 1800.0
    sweep_k: list = field(default_factory=list)  # empty: min/mid/max attainable coreness
    sweep_b: list = field(default_factory=lambda: [1, 2, 3])
    sweep_queries: int = 100
    rng_seed: int = 0
    eta: int = DEFAULT_ETA
    strategies: list = field(default_factory=lambda: ["basic", "fast"])
    gamma1: float = 0.5
    gamma2: float = 0.5
    restart_prob: float = 0.15
    tolerance: float = 1e-6
    max_iters: int = 200
    # dataset: SNAP files, or a planted-community graph when no files are given
    graph: str | None = None
    communities: str | None = None
    max_vertices: int | None = None
    synthetic_vertices: int = 10_000
    community_size_min: int = 20
    community_size_max: int = 60
    intra_degree: float = 10.0
    inter_degree: float = 1.0
    out_dir: str = "bench_out"

    def __post_init__(self):
        for name in ("cross_edge_ratio", "noise_edge_ratio"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.num_queries < 0:
            raise ValueError("num_queries must be non-negative")
        for s in self.strategies:
            Strategy(s)

    @property
    def rwr(self) -> RwrParams:
        return RwrParams(self.restart_prob, self.tolerance, self.max_iters)


def load_config(path) -> BenchConfig:
    """Read a flat JSON object of :class:`BenchConfig` fields; unknown keys are errors."""
    with open(path, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: expected a JSON object")
    known = {f.name for f in dataclasses.fields(BenchConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValueError(f"{path}: unknown config keys: {', '.join(unknown)}")
    for k, v in raw.items():
        if isinstance(v, (dict,)):
            raise ValueError(f"{path}: key {k!r} must be a scalar or list")
    return BenchConfig(**raw)


# -- ground truth and raw graphs ----------------------------------------------------

@dataclass
class GroundTruth:
    communities: list  # list of sorted int arrays (internal ids)
    membership: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.communities:
            raise ValueError("ground truth has no communities")
        self.communities = [np.asarray(sorted(set(int(v) for v in c)), dtype=np.int64)
                            for c in self.communities]
        if any(len(c) == 0 for c in self.communities):
            raise ValueError("ground truth contains an empty community")
        if not self.membership:
            for ci, c in enumerate(self.communities):
                for v in c.tolist():
                    self.membership.setdefault(v, []).append(ci)

    def shared(self, u: int, v: int) -> int | None:
        """First community holding both vertices."""
        mv = set(self.membership.get(v, ()))
        for c in self.membership.get(u, ()):
            if c in mv:
                return c
        return None


@dataclass
class RawGraph:
    """Unlabelled simple graph on internal ids with external names."""

    n: int
    edges: np.ndarray  # (m, 2), u < v, unique
    ext_ids: list = None

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        e = e[e[:, 0] != e[:, 1]]
        e = np.sort(e, axis=1)
        self.edges = np.unique(e, axis=0) if len(e) else e
        if self.ext_ids is None:
            self.ext_ids = list(range(self.n))


def read_communities(path) -> list[list[int]]:
    """SNAP ground-truth file: one community per line, whitespace-separated ids."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                out.append([int(t) for t in line.split()])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-integer vertex id") from None
    return out


def load_raw(edge_path, community_path) -> tuple[RawGraph, GroundTruth]:
    from .graph import read_edge_list

    edges = read_edge_list(edge_path)
    comms = read_communities(community_path)
    ids = sorted({v for e in edges for v in e} | {v for c in comms for v in c})
    id_map = {v: i for i, v in enumerate(ids)}
    e = np.array([(id_map[u], id_map[v]) for u, v in edges], dtype=np.int64).reshape(-1, 2)
    truth = GroundTruth([[id_map[v] for v in c] for c in comms])
    return RawGraph(len(ids), e, ids), truth


def planted_communities(n: int, size_min=20, size_max=60, intra_degree=10.0,
                        inter_degree=1.0, seed=0) -> tuple[RawGraph, GroundTruth]:
    """Disjoint random communities with sparse uniform edges between them."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    comms, chunks = [], []
    start = 0
    while start < n:
        size = min(int(rng.integers(size_min, size_max + 1)), n - start)
        members = perm[start:start + size]
        comms.append(members)
        m = int(round(intra_degree * size / 2))
        chunks.append(members[rng.integers(0, size, size=(m, 2))])
        start += size
    m_inter = int(round(inter_degree * n / 2))
    chunks.append(rng.integers(0, n, size=(m_inter, 2)))
    return RawGraph(n, np.concatenate(chunks)), GroundTruth(comms)


def subsample(raw: RawGraph, truth: GroundTruth, max_vertices: int, seed=0):
    """Random whole communities until ``max_vertices`` is reached; induced graph on them."""
    if raw.n <= max_vertices:
        return raw, truth
    rng = np.random.default_rng(seed)
    keep = np.zeros(raw.n, dtype=bool)
    chosen = []
    for ci in rng.permutation(len(truth.communities)).tolist():
        c = truth.communities[ci]
        if keep.sum() + np.count_nonzero(~keep[c]) > max_vertices:
            continue
        keep[c] = True
        chosen.append(c)
    new_id = np.full(raw.n, -1, dtype=np.int64)
    old = np.flatnonzero(keep)
    new_id[old] = np.arange(len(old))
    e = raw.edges[keep[raw.edges[:, 0]] & keep[raw.edges[:, 1]]]
    sub = RawGraph(len(old), new_id[e], [raw.ext_ids[v] for v in old.tolist()])
    return sub, GroundTruth([new_id[c] for c in chosen])


# -- dataset synthesis ------------------------------------------------------------------

@dataclass
class Dataset:
    graph: LabeledGraph
    truth: GroundTruth
    cross_added: list  # per community, cross edges added for it
    noise_added: int


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _sample_new_pairs(rng, a, b, count, existing, n):
    """Up to ``count`` distinct new pairs (one endpoint from ``a``, one from ``b``)."""
    added = []
    if count <= 0 or len(a) == 0 or len(b) == 0:
        return added
    attempts = 0
    # rejection sampling; the attempt cap only bites on saturated communities
    while len(added) < count and attempts < 50 * count + 100:
        attempts += 1
        u = int(a[rng.integers(len(a))])
        v = int(b[rng.integers(len(b))])
        key = u * n + v if u < v else v * n + u
        if u == v or key in existing:
            continue
        existing.add(key)
        added.append((u, v))
    return added


def synthesize_dataset(raw: RawGraph, truth: GroundTruth, cfg: BenchConfig,
                       max_vertices: int | None = None) -> Dataset:
    """Split every community into two randomly labelled sides and add cross and noise edges.

    Each vertex takes a uniformly random label (decided by the first community
    that lists it).  For every community, ``round(cross_edge_ratio * m_c)`` new
    heterogeneous edges join its two sides, ``m_c`` being the community's own
    edge count; ``round(noise_edge_ratio * m)`` further heterogeneous edges
    join uniformly chosen vertices of the whole graph.
    """
    if not truth.communities:
        raise ValueError("ground truth has no communities")
    if max_vertices is not None:
        raw, truth = subsample(raw, truth, max_vertices, cfg.rng_seed)
    n = raw.n
    rng = np.random.default_rng(cfg.rng_seed)
    labels = np.full(n, -1, dtype=np.int64)
    for c in truth.communities:
        fresh = c[labels[c] < 0]
        labels[fresh] = rng.integers(0, 2, size=len(fresh))
    rest = labels < 0
    labels[rest] = rng.integers(0, 2, size=int(rest.sum()))

    e = raw.edges
    existing = set((e[:, 0] * n + e[:, 1]).tolist())
    mark = np.zeros(n, dtype=bool)
    # CSR of the raw graph for per-community edge counts
    heads = np.concatenate([e[:, 0], e[:, 1]])
    tails = np.concatenate([e[:, 1], e[:, 0]])
    order = np.argsort(heads, kind="stable")
    tails = tails[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(heads, minlength=n), out=indptr[1:])

    new_edges = []
    cross_added = []
    for c in truth.communities:
        mark[c] = True
        m_c = sum(int(mark[tails[indptr[v]:indptr[v + 1]]].sum()) for v in c.tolist()) // 2
        mark[c] = False
        target = _round_half_up(cfg.cross_edge_ratio * m_c)
        side_a, side_b = c[labels[c] == 0], c[labels[c] == 1]
        pairs = _sample_new_pairs(rng, side_a, side_b, target, existing, n)
        if len(pairs) < target:
            log.warning("community of %d vertices saturated: %d/%d cross edges", len(c), len(pairs), target)
        new_edges.extend(pairs)
        cross_added.append(len(pairs))
    noise_target = _round_half_up(cfg.noise_edge_ratio * len(e))
    noise = _sample_new_pairs(rng, np.flatnonzero(labels == 0), np.flatnonzero(labels == 1),
                              noise_target, existing, n)
    new_edges.extend(noise)
    extra = np.array(new_edges, dtype=np.int64).reshape(-1, 2)
    all_e = np.concatenate([e, extra])
    g = LabeledGraph.from_arrays(n, all_e[:, 0], all_e[:, 1], labels, ("A", "B"), raw.ext_ids)
    return Dataset(g, truth, cross_added, len(noise))


# -- queries -------------------------------------------------------------------------------

def generate_queries(g: LabeledGraph, index: GraphIndex, n: int, seed=0, truth: GroundTruth | None = None,
                     fixed_ql: int | None = None, k: int | None = None, b: int = 1,
                     eta: int = DEFAULT_ETA) -> list[BccQuery]:
    """Random query pairs with distinct labels and ``k1 = delta(q_l)``, ``k2 = delta(q_r)``.

    With ``truth`` both endpoints come from one community (``q_l`` from its
    label-0 side).  ``k`` forces ``k1 = k2 = k`` and restricts endpoints to
    coreness at least ``k``.  ``fixed_ql`` pins the left endpoint.
    """
    rng = np.random.default_rng(seed)
    delta = index.delta
    floor = max(1, k or 1)
    ok = delta >= floor
    lab = g.labels
    if fixed_ql is not None and lab[fixed_ql] != 0:
        lab = 1 - lab  # the pinned vertex defines the left label

    pools = []
    if truth is not None:
        for c in truth.communities:
            if fixed_ql is not None and fixed_ql not in set(c.tolist()):
                continue
            a = c[(lab[c] == 0) & ok[c]]
            bb = c[(lab[c] == 1) & ok[c]]
            if (len(a) or fixed_ql is not None) and len(bb):
                pools.append((a, bb))
    else:
        a = np.flatnonzero((lab == 0) & ok)
        bb = np.flatnonzero((lab == 1) & ok)
        if (len(a) or fixed_ql is not None) and len(bb):
            pools.append((a, bb))
    if not pools:
        raise ValueError("no pair of differently labelled vertices satisfies the query constraints")

    queries = []
    for _ in range(n):
        a, bb = pools[int(rng.integers(len(pools)))]
        ql = fixed_ql if fixed_ql is not None else int(a[rng.integers(len(a))])
        qr = int(bb[rng.integers(len(bb))])
        k1 = k if k is not None else int(delta[ql])
        k2 = k if k is not None else int(delta[qr])
        queries.append(BccQuery(ql, qr, k1, k2, b=b, eta=eta))
    return queries


def f1(found, truth) -> float:
    truth = set(int(v) for v in truth)
    if not truth:
        raise ValueError("ground-truth community is empty")
    found = set(int(v) for v in found)
    hit = len(found & truth)
    if not found or not hit:
        return 0.0
    p = hit / len(found)
    r = hit / len(truth)
    return 2 * p * r / (p + r)


# -- benchmark runs ---------------------------------------------------------------------------

ROW_FIELDS = ["query", "q_l", "q_r", "k1", "k2", "b", "eta", "strategy", "found", "valid", "reason",
              "size", "g0_size", "query_distance", "initial_distance", "iterations", "f1",
              "t_total", "t_expand", "t_extract", "t_reduce", "t_distance", "t_leader",
              "leader_updates", "butterfly_evals"]

SUMMARY_FIELDS = ["sweep", "value", "strategy", "queries", "found", "valid", "timeouts",
                  "mean_runtime", "speedup", "mean_f1", "distance_time", "leader_time",
                  "leader_updates", "butterfly_evals"]


def result_row(qi: int, res: BccResult, g: LabeledGraph, f1_score=float("nan")) -> dict:
    q = res.query
    t = res.timings
    c = res.counters
    return {
        "query": qi, "q_l": g.ext_ids[q.q_l], "q_r": g.ext_ids[q.q_r], "k1": q.k1, "k2": q.k2,
        "b": q.b, "eta": q.eta, "strategy": q.strategy.value, "found": int(res.found),
        "valid": int(res.valid), "reason": res.reason, "size": len(res.community),
        "g0_size": res.g0_size, "query_distance": res.query_distance,
        "initial_distance": res.initial_distance, "iterations": res.iterations, "f1": f1_score,
        "t_total": t.get("total", 0.0), "t_expand": t.get("expand", 0.0),
        "t_extract": t.get("extract", 0.0), "t_reduce": t.get("reduce", 0.0),
        "t_distance": t.get("distance", 0.0), "t_leader": t.get("leader", 0.0),
        "leader_updates": c.get("leader_updates", 0), "butterfly_evals": c.get("butterfly_evals", 0),
    }


@dataclass
class BenchReport:
    rows: list
    summary: list
    results: list = field(default_factory=list)

    def by_strategy(self, strategy) -> dict:
        strategy = Strategy(strategy).value
        return next(s for s in self.summary if s["strategy"] == strategy)


def summarize(rows: list, strategies, sweep="", value="") -> list[dict]:
    out = []
    base = None
    for s in strategies:
        s = Strategy(s).value
        rs = [r for r in rows if r["strategy"] == s]
        if not rs:
            continue
        times = [r["t_total"] for r in rs]
        f1s = [r["f1"] for r in rs if not math.isnan(r["f1"])]
        mean_rt = float(np.mean(times))
        if s == Strategy.BASIC.value:
            base = mean_rt
        out.append({
            "sweep": sweep, "value": value, "strategy": s, "queries": len(rs),
            "found": sum(r["found"] for r in rs), "valid": sum(r["valid"] for r in rs),
            "timeouts": sum(1 for t in times if math.isinf(t)),
            "mean_runtime": mean_rt, "speedup": float("nan"),
            "mean_f1": float(np.mean(f1s)) if f1s else float("nan"),
            "distance_time": float(sum(r["t_distance"] for r in rs)),
            "leader_time": float(sum(r["t_leader"] for r in rs)),
            "leader_updates": sum(r["leader_updates"] for r in rs),
            "butterfly_evals": sum(r["butterfly_evals"] for r in rs),
        })
    for row in out:
        if base is not None and row["mean_runtime"] > 0:
            row["speedup"] = base / row["mean_runtime"]
    return out


def run_benchmark(g: LabeledGraph, index: GraphIndex, queries: list, cfg: BenchConfig,
                  truth: GroundTruth | None = None, strategies=None, validate=False,
                  keep_results=False) -> BenchReport:
    """Run every query under every strategy; both strategies of a query run back to back."""
    strategies = [Strategy(s) for s in (strategies or cfg.strategies)]
    rows, results = [], []
    for qi, q in enumerate(queries):
        target = None
        if truth is not None:
            ci = truth.shared(q.q_l, q.q_r)
            target = None if ci is None else truth.communities[ci]
        for s in strategies:
            res = run_query(g, index, dataclasses.replace(q, strategy=s),
                            validate=validate, timeout=cfg.timeout)
            score = f1(res.community, target) if target is not None else float("nan")
            rows.append(result_row(qi, res, g, score))
            if keep_results:
                results.append(res)
    return BenchReport(rows, summarize(rows, strategies), results)


def attainable_k(index: GraphIndex, g: LabeledGraph, truth: GroundTruth) -> list[int]:
    """Smallest, middle and largest k for which some community has both sides at coreness >= k."""
    best = 0
    delta, lab = index.delta, g.labels
    for c in truth.communities:
        a, b = delta[c][lab[c] == 0], delta[c][lab[c] == 1]
        if len(a) and len(b):
            best = max(best, int(min(a.max(), b.max())))
    if best < 1:
        return []
    return sorted({1, (1 + best) // 2, best})


def run_sweeps(g, index, truth, cfg: BenchConfig, validate=False) -> list[dict]:
    """Summary rows for the k sweep (k1 = k2 = k) and the b sweep."""
    out = []
    ks = cfg.sweep_k or attainable_k(index, g, truth)
    for k in ks:
        qs = generate_queries(g, index, cfg.sweep_queries, cfg.rng_seed + 1, truth, k=int(k), eta=cfg.eta)
        rep = run_benchmark(g, index, qs, cfg, truth, validate=validate)
        out.extend(summarize(rep.rows, cfg.strategies, "k", int(k)))
    base = generate_queries(g, index, cfg.sweep_queries, cfg.rng_seed + 2, truth, eta=cfg.eta)
    for b in cfg.sweep_b:
        qs = [dataclasses.replace(q, b=int(b)) for q in base]
        rep = run_benchmark(g, index, qs, cfg, truth, validate=validate)
        out.extend(summarize(rep.rows, cfg.strategies, "b", int(b)))
    return out


def write_csv(path, rows, fields):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)


def build_dataset(cfg: BenchConfig) -> Dataset:
    if cfg.graph or cfg.communities:
        if not (cfg.graph and cfg.communities):
            raise ValueError("config needs both 'graph' and 'communities' paths, or neither")
        raw, truth = load_raw(cfg.graph, cfg.communities)
    else:
        raw, truth = planted_communities(cfg.synthetic_vertices, cfg.community_size_min,
                                         cfg.community_size_max, cfg.intra_degree,
                                         cfg.inter_degree, cfg.rng_seed)
    return synthesize_dataset(raw, truth, cfg, cfg.max_vertices)


def run_pipeline(cfg: BenchConfig, out_dir=None) -> dict:
    """Dataset, index, queries, head-to-head run and sweeps; writes CSVs into ``out_dir``."""
    out_dir = out_dir or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    ds = build_dataset(cfg)
    log.info("dataset: %d vertices, %d edges (%.1fs)", ds.graph.n, ds.graph.edge_count, time.perf_counter() - t0)
    t0 = time.perf_counter()
    index = build_index(ds.graph, cfg.rwr, cfg.gamma1, cfg.gamma2)
    log.info("index built in %.1fs, %d butterflies", time.perf_counter() - t0, index.butterflies.total_butterflies)
    queries = []
    if cfg.num_queries:
        queries = generate_queries(ds.graph, index, cfg.num_queries, cfg.rng_seed, ds.truth, eta=cfg.eta)
    report = run_benchmark(ds.graph, index, queries, cfg, ds.truth)
    paths = {"queries": os.path.join(out_dir, "queries.csv"),
             "summary": os.path.join(out_dir, "summary.csv"),
             "sweeps": os.path.join(out_dir, "sweeps.csv")}
    write_csv(paths["queries"], report.rows, ROW_FIELDS)
    write_csv(paths["summary"], report.summary, SUMMARY_FIELDS)
    sweeps = run_sweeps(ds.graph, index, ds.truth, cfg) if cfg.sweep_queries > 0 else []
    write_csv(paths["sweeps"], sweeps, SUMMARY_FIELDS)
    return {"paths": paths, "report": report, "sweeps": sweeps, "dataset": ds, "index": index}
