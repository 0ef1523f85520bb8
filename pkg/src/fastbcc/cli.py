"""Command-line front end.

Results go to stdout as JSON lines or CSV files; logs go to stderr.  The exit
status is non-zero only for operational errors (bad files, unknown ids, index
mismatch); "no community" is a normal, reason-coded result.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
import time

from . import bench
from .engine import DEFAULT_ETA, BccQuery, Strategy, run_query, validate_bcc
from .graph import GraphFormatError, LabeledGraph, load_edge_list, write_edge_list, write_labels
from .index import IndexFormatError, RwrParams, build_index, load_index, persist_index

log = logging.getLogger("fastbcc")


def _emit(obj):
    sys.stdout.write(json.dumps(obj, sort_keys=False, default=_jsonable) + "\n")


def _jsonable(x):
    if hasattr(x, "item"):
        return x.item()
    if hasattr(x, "tolist"):
        return x.tolist()
    raise TypeError(type(x))


def _load_graph(args) -> LabeledGraph:
    if not args.labels:
        raise ValueError("--labels is required")
    return load_edge_list(args.graph, args.labels)


def cmd_build_index(args):
    t0 = time.perf_counter()
    g = _load_graph(args)
    params = RwrParams(args.restart_prob, args.tol, args.max_iters)
    idx = build_index(g, params, args.gamma1, args.gamma2)
    persist_index(idx, args.out)
    _emit({"vertices": g.n, "edges": g.edge_count,
           "butterflies": idx.butterflies.total_butterflies,
           "build_time": round(time.perf_counter() - t0, 6), "index": args.out})


def _query_record(g, res):
    row = bench.result_row(0, res, g)
    del row["query"], row["f1"]
    (ll, cl), (lr, cr) = res.leaders
    row.update({
        "leader_l": g.ext_ids[ll] if ll >= 0 else None, "chi_l": cl,
        "leader_r": g.ext_ids[lr] if lr >= 0 else None, "chi_r": cr,
        "failed": list(res.failed),
        "community": [g.ext_ids[v] for v in res.community.tolist()],
    })
    return row


def cmd_query(args):
    g = _load_graph(args)
    idx = load_index(args.index, g)
    q = BccQuery(g.internal(args.ql), g.internal(args.qr), args.k1, args.k2, args.b,
                 args.eta, Strategy(args.strategy))
    res = run_query(g, idx, q)
    _emit(_query_record(g, res))


def _read_members(path):
    with open(path, encoding="utf-8") as fh:
        return [int(t) for t in fh.read().replace(",", " ").split()]


def cmd_validate(args):
    g = _load_graph(args)
    members = [g.internal(v) for v in _read_members(args.community)]
    q = BccQuery(g.internal(args.ql), g.internal(args.qr), args.k1, args.k2, args.b)
    rep = validate_bcc(g, members, q)
    leaders = {side: (g.ext_ids[v] if v is not None else None, c) for side, (v, c) in rep.leaders.items()}
    _emit({"valid": rep.valid, "checks": rep.checks, "failed": rep.failed, "leaders": leaders})


def _config(args) -> bench.BenchConfig:
    cfg = bench.load_config(args.config) if args.config else bench.BenchConfig()
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, rng_seed=args.seed)
    return cfg


def cmd_bench_gen(args):
    cfg = _config(args)
    ds = bench.build_dataset(cfg)
    os.makedirs(args.out, exist_ok=True)
    paths = {k: os.path.join(args.out, f) for k, f in
             (("graph", "edges.txt"), ("labels", "labels.txt"), ("communities", "communities.txt"))}
    g = ds.graph
    write_edge_list(g, paths["graph"], header=f"synthetic labelled graph seed={cfg.rng_seed}\n"
                                               f"Nodes: {g.n} Edges: {g.edge_count}")
    write_labels(g, paths["labels"])
    with open(paths["communities"], "w", encoding="utf-8") as fh:
        for c in ds.truth.communities:
            fh.write("\t".join(str(g.ext_ids[v]) for v in c.tolist()) + "\n")
    _emit({"vertices": g.n, "edges": g.edge_count, "communities": len(ds.truth.communities),
           "cross_added": int(sum(ds.cross_added)), "noise_added": ds.noise_added, **paths})


def cmd_bench_run(args):
    cfg = _config(args)
    out = bench.run_pipeline(cfg, args.out)
    _emit({"summary": out["report"].summary, **out["paths"]})


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fastbcc", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def graph_args(sp):
        sp.add_argument("--graph", required=True, help="edge list (SNAP format)")
        sp.add_argument("--labels", required=True, help="'id label' file")

    b = sub.add_parser("build-index", help="build and persist the offline index")
    graph_args(b)
    b.add_argument("--out", required=True)
    b.add_argument("--gamma1", type=float, default=0.5)
    b.add_argument("--gamma2", type=float, default=0.5)
    b.add_argument("--restart-prob", type=float, default=0.15)
    b.add_argument("--tol", type=float, default=1e-6)
    b.add_argument("--max-iters", type=int, default=200)
    b.set_defaults(func=cmd_build_index)

    def query_args(sp):
        sp.add_argument("--ql", type=int, required=True)
        sp.add_argument("--qr", type=int, required=True)
        sp.add_argument("--k1", type=int, required=True)
        sp.add_argument("--k2", type=int, required=True)
        sp.add_argument("--b", type=int, default=1)

    q = sub.add_parser("query", help="answer one query")
    graph_args(q)
    q.add_argument("--index", required=True)
    query_args(q)
    q.add_argument("--eta", type=int, default=DEFAULT_ETA)
    q.add_argument("--strategy", choices=[s.value for s in Strategy], default="fast")
    q.set_defaults(func=cmd_query)

    v = sub.add_parser("validate", help="check a vertex set against the BCC conditions")
    graph_args(v)
    query_args(v)
    v.add_argument("--community", required=True, help="file of external vertex ids")
    v.set_defaults(func=cmd_validate)

    g = sub.add_parser("bench-gen", help="write a synthetic labelled dataset")
    g.add_argument("--config")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_bench_gen)

    r = sub.add_parser("bench-run", help="run the benchmark pipeline from a config file")
    r.add_argument("--config")
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="output directory (overrides out_dir)")
    r.set_defaults(func=cmd_bench_run)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (OSError, ValueError, KeyError, GraphFormatError, IndexFormatError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"fastbcc {args.command}: error: {msg}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
