"""Tests for the typed graph store and ingestion."""

import json
from unittest.mock import Mock

import pytest

from kgscout_graph import (
    INCOMING,
    OUTGOING,
    DanglingEdgeError,
    DuplicateNodeError,
    GraphBuilder,
    IngestionError,
    Neighbor,
    NodeNotFoundError,
    SelfLoopError,
    UnknownTypeError,
    graph_stats,
    load_graph,
    load_graph_files,
    render_descriptor,
    validate_against_reference,
)
from kgscout_graph.graph_store import GraphStats
from tests.conftest import FIX7_DIR

ENTITY_TYPES = ["paper", "author"]
RELATION_TYPES = ["authored_by", "cites"]


def node(node_id, node_type="paper", **fields):
    return {"id": node_id, "type": node_type, "fields": [[name, value] for name, value in fields.items()]}


def edge(src, dst, relation="authored_by"):
    return {"src": src, "dst": dst, "type": relation}


class TestFix7:
    """Hand-counted facts about the seven-node fixture graph."""

    def test_stats(self, fix7_graph):
        stats = fix7_graph.stats()
        assert stats.node_count == 7
        assert stats.edge_count == 8
        assert stats.entity_type_count == 3
        assert stats.relation_type_count == 3
        assert stats.average_degree == pytest.approx(16 / 7)
        assert graph_stats(fix7_graph) == stats

    def test_open_neighborhood_of_p1(self, fix7_graph):
        assert fix7_graph.open_neighborhood("P1") == {
            Neighbor("A1", "authored_by", OUTGOING),
            Neighbor("F1", "has_field", OUTGOING),
            Neighbor("P2", "cites", INCOMING),
        }

    def test_open_neighborhood_of_author(self, fix7_graph):
        """Authors see the papers that point at them as incoming edges."""
        assert fix7_graph.open_neighborhood("A1") == {
            Neighbor("P1", "authored_by", INCOMING),
            Neighbor("P2", "authored_by", INCOMING),
        }

    def test_neighborhood_excludes_self(self, fix7_graph):
        for node_id in fix7_graph.node_ids():
            assert node_id not in {n.node_id for n in fix7_graph.open_neighborhood(node_id)}

    def test_descriptor_text(self, fix7_graph):
        assert fix7_graph.descriptor_text("P2") == (
            "title: Citation Networks\n"
            "abstract: This paper cites prior graph work and analyzes citation structure."
        )

    def test_degree_and_ids(self, fix7_graph):
        assert fix7_graph.degree("P1") == 3
        assert fix7_graph.node_ids() == ("A1", "A2", "F1", "P1", "P2", "P3", "P4")

    def test_unknown_node(self, fix7_graph):
        with pytest.raises(NodeNotFoundError):
            fix7_graph.open_neighborhood("P9")
        with pytest.raises(NodeNotFoundError):
            fix7_graph.descriptor_text("P9")


class TestDescriptorRendering:
    def test_empty_descriptor(self):
        assert render_descriptor(()) == ""

    def test_escaping(self):
        """Newlines, backslashes and colons in names cannot forge a field boundary."""
        text = render_descriptor((("a:b", "line1\nline2"), ("c", "x\\y")))
        assert text == "a\\:b: line1\\nline2\nc: x\\\\y"

    def test_field_order_is_kept(self):
        assert render_descriptor((("z", "1"), ("a", "2"))) == "z: 1\na: 2"


class TestLoadGraph:
    def test_empty_graph(self):
        graph = load_graph([], [], ENTITY_TYPES, RELATION_TYPES)
        assert graph.stats() == GraphStats(2, 2, 0, 0, 0.0)

    def test_duplicate_node(self):
        with pytest.raises(DuplicateNodeError):
            load_graph([node("P1"), node("P1")], [], ENTITY_TYPES, RELATION_TYPES)

    def test_dangling_edge(self):
        with pytest.raises(DanglingEdgeError, match="P9"):
            load_graph([node("P1")], [edge("P1", "P9")], ENTITY_TYPES, RELATION_TYPES)

    def test_unknown_entity_type(self):
        with pytest.raises(UnknownTypeError, match="venue"):
            load_graph([node("V1", "venue")], [], ENTITY_TYPES, RELATION_TYPES)

    def test_unknown_relation_type(self):
        with pytest.raises(UnknownTypeError, match="published_in"):
            load_graph([node("P1"), node("P2")], [edge("P1", "P2", "published_in")], ENTITY_TYPES, RELATION_TYPES)

    def test_self_loop(self):
        with pytest.raises(SelfLoopError):
            load_graph([node("P1")], [edge("P1", "P1", "cites")], ENTITY_TYPES, RELATION_TYPES)

    def test_duplicate_edge_dropped_with_warning(self):
        mock_logger = Mock()
        graph = load_graph(
            [node("P1"), node("A1", "author")],
            [edge("P1", "A1"), edge("P1", "A1")],
            ENTITY_TYPES,
            RELATION_TYPES,
            logger=mock_logger,
        )
        assert len(graph.edges()) == 1
        mock_logger.warning.assert_called_once()

    def test_parallel_edges_of_different_types_are_kept(self):
        graph = load_graph(
            [node("P1"), node("P2")],
            [edge("P1", "P2", "cites"), edge("P2", "P1", "cites"), edge("P1", "P2", "authored_by")],
            ENTITY_TYPES,
            RELATION_TYPES,
        )
        assert graph.degree("P1") == 3
        assert len(graph.open_neighborhood("P1")) == 3

    def test_edges_are_canonically_ordered(self):
        graph = load_graph(
            [node("P1"), node("P2"), node("P3")],
            [edge("P3", "P1", "cites"), edge("P1", "P2", "cites")],
            ENTITY_TYPES,
            RELATION_TYPES,
        )
        assert [(e.src, e.dst) for e in graph.edges()] == [("P1", "P2"), ("P3", "P1")]

    def test_builder_accepts_edges_before_nodes(self):
        builder = GraphBuilder(ENTITY_TYPES, RELATION_TYPES)
        builder.add_edge(edge("P1", "A1"))
        builder.add_node(node("P1"))
        builder.add_node(node("A1", "author"))
        assert len(builder.build().edges()) == 1


class TestLoadGraphFiles:
    def _write(self, tmp_path, edges_text):
        (tmp_path / "nodes.jsonl").write_text(
            "\n".join(json.dumps(n) for n in [node("P1", title="a"), node("A1", "author", name="b")]) + "\n"
        )
        (tmp_path / "edges.jsonl").write_text(edges_text)
        (tmp_path / "manifest.json").write_text(json.dumps({"entity_types": ENTITY_TYPES, "relation_types": RELATION_TYPES}))
        return tmp_path / "nodes.jsonl", tmp_path / "edges.jsonl", tmp_path / "manifest.json"

    def test_fixture_files(self):
        graph = load_graph_files(FIX7_DIR / "nodes.jsonl", FIX7_DIR / "edges.jsonl", FIX7_DIR / "manifest.json")
        assert graph.name == "fix7"

    def test_malformed_edge_line_reports_line_number(self, tmp_path):
        paths = self._write(tmp_path, json.dumps(edge("P1", "A1")) + "\n{\"src\": \"P1\", \"dst\": \"A1\"}\n")
        with pytest.raises(IngestionError) as exc_info:
            load_graph_files(*paths)
        assert exc_info.value.line_number == 2
        assert "edges.jsonl:2" in str(exc_info.value)

    def test_invalid_json_line(self, tmp_path):
        paths = self._write(tmp_path, "not json\n")
        with pytest.raises(IngestionError) as exc_info:
            load_graph_files(*paths)
        assert exc_info.value.line_number == 1

    def test_dangling_edge_names_line(self, tmp_path):
        paths = self._write(tmp_path, "\n" + json.dumps(edge("P1", "A9")) + "\n")
        with pytest.raises(DanglingEdgeError, match="edges.jsonl:2"):
            load_graph_files(*paths)


class TestReferenceStats:
    def test_matching_stats(self):
        stats = GraphStats(10, 18, 129375, 8100498, 0.0)
        assert validate_against_reference(stats, "prime") == []

    def test_mismatches_are_listed(self):
        stats = GraphStats(4, 4, 1872968, 100, 0.0)
        mismatches = validate_against_reference(stats, "MAG")
        assert len(mismatches) == 1
        assert mismatches[0].startswith("edge_count")
