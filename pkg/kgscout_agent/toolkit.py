"""
Retrieval tools exposed to agent policies: global search and typed one-hop neighborhood
exploration. Toolkit.execute is the only path from a policy to the graph.
"""

from dataclasses import dataclass, field, asdict
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Tuple

from kgscout_shared import get_clean_logger
from kgscout_graph import Graph, InvertedIndex, NodeNotFoundError, tokenize

GLOBAL_SEARCH = "global_search"
NEIGHBORS = "neighbors"
TOOL_NAMES = (GLOBAL_SEARCH, NEIGHBORS)


class ToolError(Exception):
    """A tool refused the call. Reported to the policy as an error observation."""

    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message
        super().__init__(message)


@dataclass(frozen=True)
class TypeFilter:
    """Absent components mean no constraint."""
    node_types: Optional[FrozenSet[str]] = None
    relation_types: Optional[FrozenSet[str]] = None

    @classmethod
    def of(cls, node_types: Optional[Iterable[str]] = None, relation_types: Optional[Iterable[str]] = None) -> "TypeFilter":
        return cls(
            frozenset(node_types) if node_types is not None else None,
            frozenset(relation_types) if relation_types is not None else None,
        )


@dataclass(frozen=True)
class ToolBudget:
    search_default_k: int = 5
    neighbor_k: int = 20

    def __post_init__(self):
        if self.search_default_k < 1 or self.neighbor_k < 1:
            raise ValueError(f"tool budgets must be >= 1, got {self.search_default_k}/{self.neighbor_k}")


@dataclass(frozen=True)
class ToolSettings:
    """Snippet length and the toolset ablation switches."""
    snippet_chars: int = 300
    query_ranking: bool = True
    type_filtering: bool = True
    neighbors_enabled: bool = True


@dataclass(frozen=True)
class SearchHit:
    id: str
    node_type: str
    score: float
    snippet: str


@dataclass(frozen=True)
class NeighborEntry:
    id: str
    node_type: str
    connections: Tuple[Tuple[str, str], ...]
    score: Optional[float]
    snippet: str


@dataclass
class ToolResult:
    tool: str
    status: str
    results: List[Dict[str, Any]] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def observed_ids(self) -> List[str]:
        return [entry["id"] for entry in self.results]

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"tool": self.tool, "status": self.status, "results": self.results}
        if self.error is not None:
            payload["error"] = self.error
        return payload

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "ToolResult":
        return cls(payload["tool"], payload["status"], list(payload.get("results", [])), payload.get("error"))


def _hit_to_dict(hit: SearchHit) -> Dict[str, Any]:
    return asdict(hit)


def _entry_to_dict(entry: NeighborEntry) -> Dict[str, Any]:
    payload = asdict(entry)
    payload["connections"] = [{"relation": relation, "direction": direction} for relation, direction in entry.connections]
    if entry.score is None:
        del payload["score"]
    return payload


class Toolkit:
    """Stateless tools over an immutable graph and index; safe to share between agents."""

    def __init__(
        self,
        graph: Graph,
        index: InvertedIndex,
        budget: ToolBudget = ToolBudget(),
        settings: ToolSettings = ToolSettings(),
        logger=None,
    ):
        self.logger = get_clean_logger("toolkit", logger)
        self.graph = graph
        self.index = index
        self.budget = budget
        self.settings = settings

    @property
    def tool_names(self) -> Tuple[str, ...]:
        return TOOL_NAMES if self.settings.neighbors_enabled else (GLOBAL_SEARCH,)

    def _snippet(self, node_id: str) -> str:
        return self.graph.descriptor_text(node_id)[: self.settings.snippet_chars]

    # -- global search --------------------------------------------------------------------------

    def global_search(self, q: str, k: Optional[int] = None) -> List[SearchHit]:
        if not isinstance(q, str) or not tokenize(q):
            raise ToolError("empty_query", "query must contain at least one alphanumeric token")
        if k is None:
            k = self.budget.search_default_k
        if isinstance(k, bool) or not isinstance(k, int) or k < 1:
            raise ToolError("invalid_arguments", f"k must be a positive integer, got {k!r}")
        return [
            SearchHit(hit.id, self.graph.node(hit.id).node_type, hit.score, self._snippet(hit.id))
            for hit in self.index.top_k_global(q, k)
        ]

    # -- neighborhood exploration ---------------------------------------------------------------

    def _check_labels(self, labels: Optional[FrozenSet[str]], registry: Tuple[str, ...], kind: str):
        if labels is None:
            return
        unknown = sorted(labels - set(registry))
        if unknown:
            raise ToolError(
                "unknown_type",
                f"unknown {kind} type(s) {unknown}; valid {kind} types: {list(registry)}",
            )

    def candidate_set(self, v: str, type_filter: Optional[TypeFilter] = None) -> Dict[str, Tuple[Tuple[str, str], ...]]:
        """
        N_F(v): neighbors whose entity type passes F_V and that are joined to v by at least one
        edge whose relation passes F_E. Maps each neighbor to its qualifying connections.
        """
        type_filter = type_filter or TypeFilter()
        node_types = type_filter.node_types
        relation_types = type_filter.relation_types
        candidates: Dict[str, List[Tuple[str, str]]] = {}
        for neighbor in self.graph.adjacency(v):
            if relation_types is not None and neighbor.relation_type not in relation_types:
                continue
            if node_types is not None and self.graph.node(neighbor.node_id).node_type not in node_types:
                continue
            candidates.setdefault(neighbor.node_id, []).append((neighbor.relation_type, neighbor.direction))
        return {node_id: tuple(connections) for node_id, connections in candidates.items()}

    def neighbors(
        self,
        v: str,
        q: Optional[str] = None,
        type_filter: Optional[TypeFilter] = None,
    ) -> List[NeighborEntry]:
        if not self.graph.has_node(v):
            raise ToolError("unknown_node", f"unknown node id '{v}'")
        if type_filter is not None:
            self._check_labels(type_filter.node_types, self.graph.entity_types, "node")
            self._check_labels(type_filter.relation_types, self.graph.relation_types, "relation")
        if not self.settings.type_filtering:
            type_filter = None
        if not self.settings.query_ranking:
            q = None

        candidates = self.candidate_set(v, type_filter)
        ranked = bool(tokenize(q))
        entries = []
        for hit in self.index.top_k_subset(q, candidates.keys(), self.budget.neighbor_k):
            entries.append(NeighborEntry(
                id=hit.id,
                node_type=self.graph.node(hit.id).node_type,
                connections=candidates[hit.id],
                score=hit.score if ranked else None,
                snippet=self._snippet(hit.id),
            ))
        return entries

    # -- gateway --------------------------------------------------------------------------------

    def execute(self, name: str, arguments: Optional[Mapping[str, Any]] = None) -> ToolResult:
        """Run a tool by name; every failure comes back as a status=error result."""
        arguments = dict(arguments or {})
        try:
            if name == GLOBAL_SEARCH:
                self._reject_unexpected(arguments, {"q", "k"})
                hits = self.global_search(arguments.get("q"), arguments.get("k"))
                return ToolResult(name, "ok", [_hit_to_dict(hit) for hit in hits])
            if name == NEIGHBORS and self.settings.neighbors_enabled:
                self._reject_unexpected(arguments, {"v", "q", "node_types", "relation_types"})
                v = arguments.get("v")
                if not isinstance(v, str) or not v:
                    raise ToolError("invalid_arguments", "v must be a node id")
                type_filter = TypeFilter.of(
                    self._labels(arguments.get("node_types"), "node_types"),
                    self._labels(arguments.get("relation_types"), "relation_types"),
                )
                q = arguments.get("q")
                if q is not None and not isinstance(q, str):
                    raise ToolError("invalid_arguments", "q must be text")
                entries = self.neighbors(v, q, type_filter)
                return ToolResult(name, "ok", [_entry_to_dict(entry) for entry in entries])
            raise ToolError("unknown_tool", f"unknown tool '{name}'; available tools: {list(self.tool_names)}")
        except ToolError as e:
            self.logger.debug(f"Tool {name} failed ({e.code}): {e.message}")
            return ToolResult(name, "error", error=e.message)
        except NodeNotFoundError as e:
            return ToolResult(name, "error", error=str(e))

    @staticmethod
    def _reject_unexpected(arguments: Mapping[str, Any], allowed: set):
        unexpected = sorted(set(arguments) - allowed)
        if unexpected:
            raise ToolError("invalid_arguments", f"unexpected argument(s) {unexpected}; allowed: {sorted(allowed)}")

    @staticmethod
    def _labels(value: Any, name: str) -> Optional[List[str]]:
        if value is None:
            return None
        if isinstance(value, str):
            return [value]
        if not isinstance(value, (list, tuple)) or not all(isinstance(label, str) for label in value):
            raise ToolError("invalid_arguments", f"{name} must be a list of type labels")
        return list(value)

    # -- schemas --------------------------------------------------------------------------------

    def tool_schemas(self) -> List[Dict[str, Any]]:
        """OpenAI function-calling descriptions of the enabled tools."""
        schemas = [{
            "type": "function",
            "function": {
                "name": GLOBAL_SEARCH,
                "description": (
                    "Lexical (BM25) search over the descriptions of all nodes in the knowledge graph. "
                    "Returns up to k nodes with id, type, score and a text snippet."
                ),
                "parameters": {
                    "type": "object",
                    "properties": {
                        "q": {"type": "string", "description": "Search query text."},
                        "k": {
                            "type": "integer",
                            "minimum": 1,
                            "default": self.budget.search_default_k,
                            "description": "Number of nodes to return.",
                        },
                    },
                    "required": ["q"],
                },
            },
        }]
        if not self.settings.neighbors_enabled:
            return schemas

        properties: Dict[str, Any] = {
            "v": {"type": "string", "description": "Id of the node whose neighbors to list."},
        }
        if self.settings.query_ranking:
            properties["q"] = {
                "type": "string",
                "description": "Optional text used to rank the neighbors; without it they are listed by id.",
            }
        if self.settings.type_filtering:
            properties["node_types"] = {
                "type": "array",
                "items": {"type": "string", "enum": list(self.graph.entity_types)},
                "description": "Keep only neighbors of these entity types.",
            }
            properties["relation_types"] = {
                "type": "array",
                "items": {"type": "string", "enum": list(self.graph.relation_types)},
                "description": "Keep only neighbors connected through these relation types.",
            }
        schemas.append({
            "type": "function",
            "function": {
                "name": NEIGHBORS,
                "description": (
                    "List the one-hop neighbors of a node (either edge direction), with the connecting "
                    f"relation types and directions. Returns at most {self.budget.neighbor_k} neighbors."
                ),
                "parameters": {
                    "type": "object",
                    "properties": properties,
                    "required": ["v"],
                },
            },
        })
        return schemas
