"""kgscout graph layer: typed graph store, BM25 index and on-disk bundles"""

__version__ = "0.1.0"

from .graph_store import (
    Graph,
    GraphStats,
    NodeRecord,
    EdgeRecord,
    Neighbor,
    GraphError,
    DuplicateNodeError,
    DanglingEdgeError,
    UnknownTypeError,
    SelfLoopError,
    IngestionError,
    NodeNotFoundError,
    OUTGOING,
    INCOMING,
    load_graph,
    load_graph_files,
    open_neighborhood,
    descriptor_text,
    graph_stats,
    validate_against_reference,
    GraphBuilder,
    STARK_REFERENCE_STATS,
    render_descriptor,
)
from .lexical_index import Bm25Params, InvertedIndex, ScoredNode, tokenize, build_index
from .bundle import save_bundle, load_bundle

__all__ = [
    "Graph", "GraphStats", "NodeRecord", "EdgeRecord", "Neighbor",
    "GraphError", "DuplicateNodeError", "DanglingEdgeError", "UnknownTypeError", "SelfLoopError",
    "IngestionError", "NodeNotFoundError", "OUTGOING", "INCOMING",
    "load_graph", "load_graph_files", "open_neighborhood", "descriptor_text", "graph_stats",
    "validate_against_reference", "GraphBuilder", "STARK_REFERENCE_STATS", "render_descriptor",
    "Bm25Params", "InvertedIndex", "ScoredNode", "tokenize", "build_index",
    "save_bundle", "load_bundle",
]
