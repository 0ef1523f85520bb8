"""Butterfly-core community search on two-label graphs."""
from .engine import (BccQuery, BccResult, CandidateGraph, NoCommunity, Strategy, ValidationReport,
                     bqdc, extract_bcc, filvm, local_expand, maintain_bcc, query_distance, run_query,
                     validate_bcc)
from .graph import (EdgeKind, GraphFormatError, LabeledGraph, MissingLabelError, bfs_distances,
                    induced_subgraph, load_edge_list, load_labels, shortest_path)
from .index import (ButterflyIndex, CorenessIndex, CrossBipartite, GraphIndex, IndexFormatError,
                    RwrParams, ScoreIndex, build_index, butterfly_degrees, comprehensive_scores,
                    core_decomposition, extract_cross_bipartite, load_index, normalize_bsn,
                    normalize_rsn, persist_index, rs_scores, rwr_scores)

__version__ = "0.1.0"
