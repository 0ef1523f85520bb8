"""Offline indexes: per-side coreness, butterfly degrees and RWR-based vertex scores."""
from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .graph import LabeledGraph


class IndexFormatError(ValueError):
    """Index file is corrupt, truncated, of another version, or built for another graph."""


@dataclass(frozen=True)
class RwrParams:
    restart_prob: float = 0.15
    tolerance: float = 1e-6
    max_iters: int = 200

    def __post_init__(self):
        if not 0.0 < self.restart_prob < 1.0:
            raise ValueError(f"restart_prob must lie in (0, 1), got {self.restart_prob}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")


@dataclass
class CorenessIndex:
    delta: np.ndarray


@dataclass
class CrossBipartite:
    """Heterogeneous edges of an (optionally restricted) graph and their endpoints.

    ``left`` holds label-0 vertices, ``right`` label-1 vertices, and every row
    of ``edges`` is ``(left vertex, right vertex)``.
    """

    n: int
    left: np.ndarray
    right: np.ndarray
    edges: np.ndarray

    @property
    def vertices(self) -> np.ndarray:
        return np.concatenate([self.left, self.right])

    def mask(self) -> np.ndarray:
        m = np.zeros(self.n, dtype=bool)
        m[self.left] = True
        m[self.right] = True
        return m


@dataclass
class ButterflyIndex:
    chi: np.ndarray
    total_butterflies: int


@dataclass
class ScoreIndex:
    """Per-vertex scores; NaN marks vertices without an entry (degree 0)."""

    rs: np.ndarray
    rsn: np.ndarray
    bsn: np.ndarray
    vsc: np.ndarray
    gamma1: float = 0.5
    gamma2: float = 0.5


@dataclass
class GraphIndex:
    coreness: CorenessIndex
    butterflies: ButterflyIndex
    scores: ScoreIndex
    rwr: RwrParams = field(default_factory=RwrParams)
    graph_digest: int = 0

    @property
    def n(self) -> int:
        return len(self.coreness.delta)

    @property
    def delta(self) -> np.ndarray:
        return self.coreness.delta

    @property
    def chi(self) -> np.ndarray:
        return self.butterflies.chi

    @property
    def vsc(self) -> np.ndarray:
        return self.scores.vsc

    # plain-list copies for per-vertex access in query loops
    @cached_property
    def delta_list(self) -> list[int]:
        return self.coreness.delta.tolist()

    @cached_property
    def vsc_list(self) -> list[float]:
        return self.scores.vsc.tolist()


# -- coreness -------------------------------------------------------------------

def _homogeneous_adjacency(g: LabeledGraph, side):
    lab = g.labels_list
    if side is None:
        return [[w for w in nbrs if lab[w] == lab[v]] for v, nbrs in enumerate(g.adj)]
    return [[w for w in nbrs if lab[w] == side] if lab[v] == side else []
            for v, nbrs in enumerate(g.adj)]


def core_numbers(adj: list[list[int]]) -> list[int]:
    """Bucket-based core decomposition of an adjacency list (O(n + m))."""
    n = len(adj)
    deg = [len(a) for a in adj]
    if n == 0:
        return []
    md = max(deg)
    bins = [0] * (md + 1)
    for d in deg:
        bins[d] += 1
    start = 0
    for d in range(md + 1):
        bins[d], start = start, start + bins[d]
    pos = [0] * n
    vert = [0] * n
    for v in range(n):
        pos[v] = bins[deg[v]]
        vert[pos[v]] = v
        bins[deg[v]] += 1
    for d in range(md, 0, -1):
        bins[d] = bins[d - 1]
    bins[0] = 0
    for i in range(n):
        v = vert[i]
        dv = deg[v]
        for u in adj[v]:
            du = deg[u]
            if du > dv:
                pu = pos[u]
                pw = bins[du]
                w = vert[pw]
                if u != w:
                    pos[u], pos[w] = pw, pu
                    vert[pu], vert[pw] = w, u
                bins[du] += 1
                deg[u] = du - 1
    return deg


def core_decomposition(g: LabeledGraph, side: int | None = None) -> CorenessIndex:
    """Coreness of every vertex inside its own label side (homogeneous edges only).

    With ``side`` set to 0 or 1 only that side is decomposed and the other
    side's entries are 0.
    """
    delta = core_numbers(_homogeneous_adjacency(g, side))
    return CorenessIndex(np.asarray(delta, dtype=np.int64))


# -- cross bipartite and butterflies -------------------------------------------------

def extract_cross_bipartite(g: LabeledGraph, active=None) -> CrossBipartite:
    e = g.edges()
    lab = g.labels
    keep = lab[e[:, 0]] != lab[e[:, 1]]
    if active is not None:
        mask = np.zeros(g.n, dtype=bool)
        if isinstance(active, np.ndarray) and active.dtype == bool:
            mask = active
        else:
            mask[np.fromiter(active, dtype=np.int64)] = True
        keep &= mask[e[:, 0]] & mask[e[:, 1]]
    e = e[keep]
    swap = lab[e[:, 0]] == 1
    e[swap] = e[swap][:, ::-1]
    order = np.lexsort((e[:, 1], e[:, 0]))
    e = e[order]
    return CrossBipartite(g.n, np.unique(e[:, 0]), np.unique(e[:, 1]), e)


def _pair_butterflies(a: sp.csr_matrix) -> np.ndarray:
    # wedge counts between same-side vertex pairs; each pair with w common
    # neighbours closes C(w, 2) butterflies
    w = (a @ a.T).tocoo()
    off = w.row != w.col
    contrib = w.data[off] * (w.data[off] - 1) // 2
    return np.bincount(w.row[off], weights=contrib, minlength=a.shape[0]).astype(np.int64)


def butterfly_degrees(b: CrossBipartite) -> ButterflyIndex:
    """Exact butterfly degree of every vertex of the cross bipartite."""
    chi = np.zeros(b.n, dtype=np.int64)
    if len(b.edges) == 0:
        return ButterflyIndex(chi, 0)
    li = np.searchsorted(b.left, b.edges[:, 0])
    ri = np.searchsorted(b.right, b.edges[:, 1])
    a = sp.csr_matrix((np.ones(len(li), dtype=np.int64), (li, ri)),
                      shape=(len(b.left), len(b.right)))
    chi[b.left] = _pair_butterflies(a)
    chi[b.right] = _pair_butterflies(a.T.tocsr())
    total = int(chi[b.left].sum() // 2)
    return ButterflyIndex(chi, total)


# -- random walk with restart --------------------------------------------------------

def transition_matrix(g: LabeledGraph) -> sp.csr_matrix:
    """Column-stochastic transition matrix; degree-0 columns are zero."""
    deg = g.degrees().astype(float)
    inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
    a = sp.csr_matrix((np.ones(len(g.indices)), g.indices, g.indptr), shape=(g.n, g.n))
    return (a @ sp.diags(inv)).tocsr()


def rwr(w: sp.csr_matrix, restart: np.ndarray, p: RwrParams) -> np.ndarray:
    """Power iteration ``s <- (1-c) W s + c r`` until the L1 step is below tolerance."""
    c = p.restart_prob
    s = restart.copy()
    for _ in range(p.max_iters):
        nxt = (1.0 - c) * (w @ s) + c * restart
        step = np.abs(nxt - s).sum()
        s = nxt
        if step <= p.tolerance:
            break
    return s


def rwr_scores(g: LabeledGraph, seed: int, p: RwrParams = RwrParams(), w=None) -> np.ndarray:
    if g.degree(seed) == 0:
        raise ValueError(f"seed vertex {seed} has degree 0 and cannot be scored")
    e = np.zeros(g.n)
    e[seed] = 1.0
    return rwr(transition_matrix(g) if w is None else w, e, p)


def rs_scores(g: LabeledGraph, p: RwrParams = RwrParams()) -> np.ndarray:
    """Mean score each vertex receives over walks seeded at every non-isolated vertex.

    By linearity this equals one walk whose restart distribution is uniform
    over those seeds.  Isolated vertices get NaN.
    """
    scored = g.degrees() > 0
    if not scored.any():
        raise ValueError("graph has no edges")
    r = scored / scored.sum()
    rs = rwr(transition_matrix(g), r, p)
    rs[~scored] = np.nan
    return rs


def _minmax(values: np.ndarray, domain: np.ndarray) -> np.ndarray:
    out = np.full(len(values), np.nan)
    if not domain.any():
        return out
    x = values[domain].astype(float)
    lo, hi = x.min(), x.max()
    out[domain] = 0.5 if hi == lo else (x - lo) / (hi - lo)
    return out


def normalize_rsn(rs: np.ndarray) -> np.ndarray:
    return _minmax(rs, ~np.isnan(rs))


def normalize_bsn(chi: ButterflyIndex | np.ndarray, domain: np.ndarray) -> np.ndarray:
    """Min-max butterfly degrees over ``domain`` (a boolean mask of V_B); 0 outside."""
    values = chi.chi if isinstance(chi, ButterflyIndex) else np.asarray(chi)
    domain = np.asarray(domain, dtype=bool)
    if not domain.any():
        raise ValueError("butterfly normalisation domain is empty")
    out = _minmax(values, domain)
    out[~domain] = 0.0
    return out


def comprehensive_scores(rsn: np.ndarray, bsn: np.ndarray, gamma1=0.5, gamma2=0.5) -> np.ndarray:
    if gamma1 < 0 or gamma2 < 0:
        raise ValueError("gamma weights must be non-negative")
    return gamma1 * rsn + gamma2 * np.nan_to_num(bsn)  # NaN in rsn marks degree-0 vertices


def build_index(g: LabeledGraph, rwr_params: RwrParams = RwrParams(),
                gamma1: float = 0.5, gamma2: float = 0.5) -> GraphIndex:
    if abs(gamma1 + gamma2 - 1.0) > 1e-9 or gamma1 < 0 or gamma2 < 0:
        raise ValueError(f"gamma1 and gamma2 must be non-negative and sum to 1, got {gamma1}, {gamma2}")
    coreness = core_decomposition(g)
    cross = extract_cross_bipartite(g)
    bf = butterfly_degrees(cross)
    rs = rs_scores(g, rwr_params)
    rsn = normalize_rsn(rs)
    in_b = cross.mask()
    bsn = normalize_bsn(bf, in_b) if in_b.any() else np.zeros(g.n)
    vsc = comprehensive_scores(rsn, bsn, gamma1, gamma2)
    scores = ScoreIndex(rs, rsn, bsn, vsc, gamma1, gamma2)
    return GraphIndex(coreness, bf, scores, rwr_params, graph_digest(g))


def graph_digest(g: LabeledGraph) -> int:
    crc = zlib.crc32(np.ascontiguousarray(g.indptr).tobytes())
    crc = zlib.crc32(np.ascontiguousarray(g.indices).tobytes(), crc)
    return zlib.crc32(np.ascontiguousarray(g.labels).tobytes(), crc)


# -- persistence -------------------------------------------------------------------

MAGIC = b"FBCCIDX\x00"
VERSION = 1
_ARRAYS = (("delta", "<i8"), ("chi", "<i8"), ("rs", "<f8"), ("rsn", "<f8"), ("bsn", "<f8"), ("vsc", "<f8"))


def _arrays(idx: GraphIndex):
    s = idx.scores
    return {"delta": idx.delta, "chi": idx.chi, "rs": s.rs, "rsn": s.rsn, "bsn": s.bsn, "vsc": s.vsc}


def persist_index(idx: GraphIndex, path):
    """Write the index as ``magic | version | header | arrays | crc32``.

    The output is a pure function of the index, so rebuilding from the same
    inputs gives a byte-identical file.
    """
    arrays = _arrays(idx)
    n = idx.n
    for name, arr in arrays.items():
        if len(arr) != n:
            raise ValueError(f"index array {name!r} has {len(arr)} entries, expected {n}")
    header = {
        "n": n,
        "total_butterflies": int(idx.butterflies.total_butterflies),
        "gamma1": idx.scores.gamma1,
        "gamma2": idx.scores.gamma2,
        "rwr": {"restart_prob": idx.rwr.restart_prob, "tolerance": idx.rwr.tolerance,
                "max_iters": idx.rwr.max_iters},
        "graph_digest": int(idx.graph_digest),
        "arrays": [name for name, _ in _ARRAYS],
    }
    hbytes = json.dumps(header, sort_keys=True).encode()
    body = MAGIC + struct.pack("<II", VERSION, len(hbytes)) + hbytes
    body += b"".join(np.ascontiguousarray(arrays[name], dtype=dt).tobytes() for name, dt in _ARRAYS)
    with open(path, "wb") as fh:
        fh.write(body + struct.pack("<I", zlib.crc32(body)))


def load_index(path, graph: LabeledGraph | None = None) -> GraphIndex:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC) + 12 or not data.startswith(MAGIC):
        raise IndexFormatError(f"{path}: not an index file")
    version, hlen = struct.unpack_from("<II", data, len(MAGIC))
    if version != VERSION:
        raise IndexFormatError(f"{path}: index version {version}, expected {VERSION}")
    body, (crc,) = data[:-4], struct.unpack("<I", data[-4:])
    if zlib.crc32(body) != crc:
        raise IndexFormatError(f"{path}: checksum mismatch (truncated or corrupt file)")
    off = len(MAGIC) + 8
    try:
        header = json.loads(body[off:off + hlen])
    except ValueError as exc:
        raise IndexFormatError(f"{path}: unreadable header: {exc}") from None
    off += hlen
    n = header["n"]
    if len(body) - off != n * 8 * len(_ARRAYS):
        raise IndexFormatError(f"{path}: payload size does not match n={n}")
    arrays = {}
    for name, dt in _ARRAYS:
        arrays[name] = np.frombuffer(body, dtype=dt, count=n, offset=off).astype(dt[1:]).copy()
        off += n * 8
    if graph is not None:
        if graph.n != n:
            raise IndexFormatError(f"{path}: index covers {n} vertices but graph has {graph.n}")
        if header["graph_digest"] != graph_digest(graph):
            raise IndexFormatError(f"{path}: index was built for a different graph")
    scores = ScoreIndex(arrays["rs"], arrays["rsn"], arrays["bsn"], arrays["vsc"],
                        header["gamma1"], header["gamma2"])
    return GraphIndex(CorenessIndex(arrays["delta"]),
                      ButterflyIndex(arrays["chi"], header["total_butterflies"]),
                      scores, RwrParams(**header["rwr"]), header["graph_digest"])
