"""
On-disk graph + index bundle.

A bundle is a directory:
  manifest.json   format version, graph name, type registries, BM25 parameters, stats
  nodes.jsonl     ingestion-format node lines, ascending id
  edges.jsonl     ingestion-format edge lines, canonical (src, dst, type) order
  postings.jsonl  {"token", "postings": [[id, tf], ...]} per token, ascending token

Everything is written with sorted keys and fixed separators so identical inputs produce
byte-identical bundles.
"""

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Tuple

from kgscout_shared import get_clean_logger
from .graph_store import Graph, IngestionError, load_graph_files
from .lexical_index import Bm25Params, InvertedIndex

BUNDLE_FORMAT_VERSION = 1

MANIFEST_FILE = "manifest.json"
NODES_FILE = "nodes.jsonl"
EDGES_FILE = "edges.jsonl"
POSTINGS_FILE = "postings.jsonl"


def dumps_line(record: Dict[str, Any]) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n"


def _write_lines(path: Path, records: Iterable[Dict[str, Any]]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="\n") as file:
        for record in records:
            file.write(dumps_line(record))
            count += 1
    return count


def save_bundle(graph: Graph, index: InvertedIndex, bundle_dir, logger=None) -> Path:
    logger = get_clean_logger("bundle", logger)
    bundle_dir = Path(bundle_dir)
    bundle_dir.mkdir(parents=True, exist_ok=True)

    _write_lines(bundle_dir / NODES_FILE, (
        {"id": node.id, "type": node.node_type, "fields": [list(field) for field in node.descriptor]}
        for node in (graph.node(node_id) for node_id in graph.node_ids())
    ))
    _write_lines(bundle_dir / EDGES_FILE, (
        {"src": edge.src, "dst": edge.dst, "type": edge.relation_type} for edge in graph.edges()
    ))
    _write_lines(bundle_dir / POSTINGS_FILE, (
        {"token": token, "postings": [[node_id, tf] for node_id, tf in index.postings_for(token)]}
        for token in index.tokens()
    ))

    manifest = {
        "format_version": BUNDLE_FORMAT_VERSION,
        "name": graph.name,
        "entity_types": list(graph.entity_types),
        "relation_types": list(graph.relation_types),
        "bm25": {"k1": index.params.k1, "b": index.params.b},
        "doc_lengths": [index.doc_length(node_id) for node_id in index.node_ids],
        "stats": graph.stats().to_dict(),
    }
    with open(bundle_dir / MANIFEST_FILE, "w", encoding="utf-8", newline="\n") as file:
        file.write(json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=2) + "\n")

    logger.info(f"Saved bundle to {bundle_dir}")
    return bundle_dir


def _read_postings(path: Path) -> Iterable[Tuple[str, list]]:
    with open(path, "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, start=1):
            try:
                record = json.loads(line)
                yield record["token"], record["postings"]
            except (json.JSONDecodeError, KeyError) as e:
                raise IngestionError(f"invalid postings line: {e}", str(path), line_number) from None


def load_bundle(bundle_dir, logger=None) -> Tuple[Graph, InvertedIndex]:
    """Load a bundle written by save_bundle; the index is restored from the postings dump."""
    bundle_dir = Path(bundle_dir)
    manifest_path = bundle_dir / MANIFEST_FILE
    if not manifest_path.exists():
        raise FileNotFoundError(f"No bundle manifest at {manifest_path}")
    with open(manifest_path, "r", encoding="utf-8") as file:
        manifest = json.load(file)
    if manifest.get("format_version") != BUNDLE_FORMAT_VERSION:
        raise IngestionError(
            f"unsupported bundle format version {manifest.get('format_version')}", str(manifest_path), 1
        )

    graph = load_graph_files(bundle_dir / NODES_FILE, bundle_dir / EDGES_FILE, manifest_path, logger=logger)
    params = Bm25Params(**manifest["bm25"])
    index = InvertedIndex.from_postings(
        graph.node_ids(),
        manifest["doc_lengths"],
        _read_postings(bundle_dir / POSTINGS_FILE),
        params,
        logger=logger,
    )
    return graph, index
