"""
Typed knowledge graph store.

Nodes carry an entity type and an ordered descriptor (field name/value pairs). Edges are stored
as directed records; adjacency is derived in both directions so traversal ignores direction while
the direction stays visible to callers.
"""

import json
from dataclasses import dataclass, asdict
from pathlib import Path
from types import MappingProxyType
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from kgscout_shared import get_clean_logger
from kgscout_shared.schemas import first_error

OUTGOING = "outgoing"
INCOMING = "incoming"


class GraphError(ValueError):
    """Base class for load-time rejections."""


class DuplicateNodeError(GraphError):
    pass


class DanglingEdgeError(GraphError):
    pass


class UnknownTypeError(GraphError):
    pass


class SelfLoopError(GraphError):
    pass


class IngestionError(GraphError):
    """A malformed ingestion line; carries the file and 1-based line number."""

    def __init__(self, message: str, source: str = "", line_number: Optional[int] = None):
        self.source = source
        self.line_number = line_number
        location = f"{source}:{line_number}: " if source and line_number else ""
        super().__init__(f"{location}{message}")


class NodeNotFoundError(LookupError):
    def __init__(self, node_id: str):
        self.node_id = node_id
        super().__init__(f"unknown node id '{node_id}'")

    def __str__(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class NodeRecord:
    id: str
    node_type: str
    descriptor: Tuple[Tuple[str, str], ...] = ()


@dataclass(frozen=True, order=True)
class EdgeRecord:
    src: str
    dst: str
    relation_type: str


class Neighbor(NamedTuple):
    node_id: str
    relation_type: str
    direction: str


@dataclass(frozen=True)
class GraphStats:
    entity_type_count: int
    relation_type_count: int
    node_count: int
    edge_count: int
    average_degree: float

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


# Published sizes of the STaRK graphs, used to validate full ingestions.
STARK_REFERENCE_STATS = {
    "amazon": {"entity_type_count": 4, "relation_type_count": 5, "node_count": 1035542, "edge_count": 9443802},
    "mag": {"entity_type_count": 4, "relation_type_count": 4, "node_count": 1872968, "edge_count": 39802116},
    "prime": {"entity_type_count": 10, "relation_type_count": 18, "node_count": 129375, "edge_count": 8100498},
}


def _escape(text: str, escape_colon: bool = False) -> str:
    text = text.replace("\\", "\\\\").replace("\n", "\\n")
    if escape_colon:
        text = text.replace(":", "\\:")
    return text


def render_descriptor(descriptor: Sequence[Tuple[str, str]]) -> str:
    """One "<name>: <value>" line per field, in input order."""
    return "\n".join(f"{_escape(name, escape_colon=True)}: {_escape(value)}" for name, value in descriptor)


class Graph:
    """Immutable heterogeneous graph with symmetric adjacency."""

    def __init__(
        self,
        nodes: Mapping[str, NodeRecord],
        edges: Iterable[EdgeRecord],
        entity_types: Iterable[str],
        relation_types: Iterable[str],
        name: str = "",
    ):
        self.name = name
        self.entity_types: Tuple[str, ...] = tuple(sorted(set(entity_types)))
        self.relation_types: Tuple[str, ...] = tuple(sorted(set(relation_types)))
        self._nodes = MappingProxyType(dict(nodes))
        self._edges: Tuple[EdgeRecord, ...] = tuple(sorted(set(edges)))

        adjacency: Dict[str, List[Neighbor]] = {node_id: [] for node_id in self._nodes}
        for edge in self._edges:
            adjacency[edge.src].append(Neighbor(edge.dst, edge.relation_type, OUTGOING))
            adjacency[edge.dst].append(Neighbor(edge.src, edge.relation_type, INCOMING))
        self._adjacency = MappingProxyType({node_id: tuple(sorted(entries)) for node_id, entries in adjacency.items()})
        self._node_ids: Tuple[str, ...] = tuple(sorted(self._nodes))

    def __len__(self) -> int:
        return len(self._nodes)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self._nodes

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def node(self, node_id: str) -> NodeRecord:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise NodeNotFoundError(node_id) from None

    def node_ids(self) -> Tuple[str, ...]:
        """All node ids in ascending order."""
        return self._node_ids

    def edges(self) -> Tuple[EdgeRecord, ...]:
        return self._edges

    def adjacency(self, node_id: str) -> Tuple[Neighbor, ...]:
        """Incident edges of a node, one entry per edge record, sorted."""
        try:
            return self._adjacency[node_id]
        except KeyError:
            raise NodeNotFoundError(node_id) from None

    def open_neighborhood(self, node_id: str) -> FrozenSet[Neighbor]:
        return frozenset(self.adjacency(node_id))

    def degree(self, node_id: str) -> int:
        return len(self.adjacency(node_id))

    def descriptor_text(self, node_id: str) -> str:
        return render_descriptor(self.node(node_id).descriptor)

    def stats(self) -> GraphStats:
        node_count = len(self._nodes)
        edge_count = len(self._edges)
        return GraphStats(
            entity_type_count=len(self.entity_types),
            relation_type_count=len(self.relation_types),
            node_count=node_count,
            edge_count=edge_count,
            average_degree=(2 * edge_count / node_count) if node_count else 0.0,
        )


class GraphBuilder:
    """Accumulates ingestion records and rejects anything that would break the graph invariants."""

    def __init__(self, entity_types: Iterable[str], relation_types: Iterable[str], name: str = "", logger=None):
        self.logger = get_clean_logger("graph_store", logger)
        self.name = name
        self.entity_types = frozenset(entity_types)
        self.relation_types = frozenset(relation_types)
        self.nodes: Dict[str, NodeRecord] = {}
        self.edges: Dict[Tuple[str, str, str], Tuple[EdgeRecord, str]] = {}
        self.duplicate_edges = 0

    @staticmethod
    def _where(source: str, line_number: Optional[int]) -> str:
        if line_number is None:
            return ""
        return f"{source or 'line'}:{line_number}: " if source else f"line {line_number}: "

    def add_node(self, record: Mapping[str, Any], source: str = "", line_number: Optional[int] = None) -> NodeRecord:
        where = self._where(source, line_number)
        node_id = record["id"]
        node_type = record["type"]
        if not node_id:
            raise IngestionError("node id must be non-empty", source, line_number)
        if node_id in self.nodes:
            raise DuplicateNodeError(f"{where}duplicate node id '{node_id}'")
        if node_type not in self.entity_types:
            raise UnknownTypeError(f"{where}node '{node_id}' has undeclared entity type '{node_type}'")
        node = NodeRecord(
            id=node_id,
            node_type=node_type,
            descriptor=tuple((str(name), str(value)) for name, value in record.get("fields", ())),
        )
        self.nodes[node_id] = node
        return node

    def add_edge(self, record: Mapping[str, Any], source: str = "", line_number: Optional[int] = None) -> None:
        # endpoints are resolved in build() so edges may arrive before their nodes
        where = self._where(source, line_number)
        edge = EdgeRecord(record["src"], record["dst"], record["type"])
        label = f"{edge.src} -[{edge.relation_type}]-> {edge.dst}"
        if edge.relation_type not in self.relation_types:
            raise UnknownTypeError(f"{where}edge {label} has undeclared relation type '{edge.relation_type}'")
        if edge.src == edge.dst:
            raise SelfLoopError(f"{where}self-loop rejected: {label}")
        key = (edge.src, edge.dst, edge.relation_type)
        if key in self.edges:
            self.duplicate_edges += 1
            self.logger.warning(f"Dropping duplicate edge {label} ({where or 'stream'})")
            return
        self.edges[key] = (edge, where)

    def build(self) -> Graph:
        for edge, where in self.edges.values():
            for endpoint in (edge.src, edge.dst):
                if endpoint not in self.nodes:
                    raise DanglingEdgeError(
                        f"{where}edge {edge.src} -[{edge.relation_type}]-> {edge.dst} references unknown node '{endpoint}'"
                    )
        graph = Graph(
            self.nodes,
            (edge for edge, _ in self.edges.values()),
            self.entity_types,
            self.relation_types,
            name=self.name,
        )
        self.logger.info(
            f"Loaded graph '{self.name}': {len(graph)} nodes, {len(graph.edges())} edges "
            f"({self.duplicate_edges} duplicate edges dropped)"
        )
        return graph


def load_graph(
    node_stream: Iterable[Mapping[str, Any]],
    edge_stream: Iterable[Mapping[str, Any]],
    entity_types: Iterable[str],
    relation_types: Iterable[str],
    name: str = "",
    logger=None,
) -> Graph:
    """
    Build a validated Graph from node and edge records.

    Args:
        node_stream: records {"id", "type", "fields": [[name, value], ...]}
        edge_stream: records {"src", "dst", "type"}
        entity_types: declared entity type vocabulary
        relation_types: declared relation type vocabulary

    Raises:
        DuplicateNodeError, DanglingEdgeError, UnknownTypeError, SelfLoopError
    """
    builder = GraphBuilder(entity_types, relation_types, name=name, logger=logger)
    for line_number, record in enumerate(node_stream, start=1):
        builder.add_node(record, line_number=line_number)
    for line_number, record in enumerate(edge_stream, start=1):
        builder.add_edge(record, line_number=line_number)
    return builder.build()


def read_jsonl(path, schema_id: str) -> Iterable[Tuple[int, Dict[str, Any]]]:
    """Yield (line number, record) pairs, validating every line against a schema."""
    source = str(path)
    with open(path, "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise IngestionError(f"invalid JSON: {e.msg}", source, line_number) from None
            error = first_error(schema_id, record)
            if error:
                raise IngestionError(f"invalid record {error}", source, line_number)
            yield line_number, record


def read_manifest(path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as file:
        try:
            manifest = json.load(file)
        except json.JSONDecodeError as e:
            raise IngestionError(f"invalid JSON: {e.msg}", str(path), e.lineno) from None
    error = first_error("GRAPH_MANIFEST", manifest)
    if error:
        raise IngestionError(f"invalid manifest {error}", str(path), 1)
    return manifest


def load_graph_files(nodes_path, edges_path, manifest_path, logger=None) -> Graph:
    """Load a graph from JSONL node/edge files and the type manifest sidecar."""
    manifest = read_manifest(manifest_path)
    builder = GraphBuilder(
        manifest["entity_types"],
        manifest["relation_types"],
        name=manifest.get("name", Path(nodes_path).parent.name),
        logger=logger,
    )
    for line_number, record in read_jsonl(nodes_path, "NODE_RECORD"):
        builder.add_node(record, source=str(nodes_path), line_number=line_number)
    for line_number, record in read_jsonl(edges_path, "EDGE_RECORD"):
        builder.add_edge(record, source=str(edges_path), line_number=line_number)
    return builder.build()


def open_neighborhood(graph: Graph, node_id: str) -> FrozenSet[Neighbor]:
    return graph.open_neighborhood(node_id)


def descriptor_text(graph: Graph, node_id: str) -> str:
    return graph.descriptor_text(node_id)


def graph_stats(graph: Graph) -> GraphStats:
    return graph.stats()


def validate_against_reference(stats: GraphStats, dataset: str) -> List[str]:
    """Compare loaded counts with the published dataset table; returns human-readable mismatches."""
    expected = STARK_REFERENCE_STATS[dataset.lower()]
    actual = stats.to_dict()
    return [
        f"{key}: expected {value:,}, got {actual[key]:,}"
        for key, value in expected.items()
        if actual[key] != value
    ]
