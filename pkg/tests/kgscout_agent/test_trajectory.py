"""Tests for actions, trajectories and the final-answer format."""

import json

import pytest

from kgscout_agent import (
    AnswerFormatError,
    FinalAnswer,
    Finish,
    Observation,
    RetrievedList,
    Select,
    Step,
    Termination,
    ToolCall,
    ToolResult,
    Trajectory,
    parse_final_answer,
    serialize_actions,
)


class TestParseFinalAnswer:
    def test_plain_object(self):
        assert parse_final_answer('{"select": ["P1", "P3"], "finish": true}') == FinalAnswer(("P1", "P3"), True)

    def test_finish_defaults_to_true(self):
        assert parse_final_answer('{"select": ["P1"]}').finish is True

    def test_reasoning_before_answer(self):
        text = 'P3 matches every constraint.\n{"select": ["P3"], "finish": true}'
        assert parse_final_answer(text).select == ("P3",)

    def test_last_answer_wins(self):
        text = '{"select": ["P1"], "finish": false} on second thought {"select": ["P2"], "finish": true}'
        assert parse_final_answer(text) == FinalAnswer(("P2",), True)

    def test_code_fence(self):
        assert parse_final_answer('```json\n{"select": ["A1"], "finish": true}\n```').select == ("A1",)

    def test_integer_ids_become_text(self):
        assert parse_final_answer('{"select": [12, 40], "finish": true}').select == ("12", "40")

    def test_duplicates_collapse(self):
        assert parse_final_answer('{"select": ["P1", "P1", "P2"]}').select == ("P1", "P2")

    @pytest.mark.parametrize("text", [None, "", "I will search next.", '{"q": "graph"}'])
    def test_no_answer(self, text):
        assert parse_final_answer(text) is None

    @pytest.mark.parametrize("text", [
        '{"select": "P1", "finish": true}',
        '{"select": ["P1"], "finish": "yes"}',
        '{"select": [], "finish": false}',
        '{"select": ["P1"], "stop": true}',
    ])
    def test_invalid_answer(self, text):
        with pytest.raises(AnswerFormatError):
            parse_final_answer(text)

    def test_empty_finish(self):
        assert parse_final_answer('{"select": [], "finish": true}').to_actions() == [Finish()]


class TestSerializeActions:
    def test_tool_calls_get_step_ids(self):
        message, actions = serialize_actions(
            [ToolCall("global_search", {"q": "graph", "k": 2}), ToolCall("neighbors", {"v": "P1"})], 3
        )
        assert [call["id"] for call in message["tool_calls"]] == ["call_3_0", "call_3_1"]
        assert json.loads(message["tool_calls"][0]["function"]["arguments"]) == {"q": "graph", "k": 2}
        assert message["content"] == ""
        assert [a.call_id for a in actions] == ["call_3_0", "call_3_1"]

    def test_selection_and_finish_become_answer(self):
        message, _ = serialize_actions([Select(("P1",)), Select(("P2",)), Finish()], 1)
        assert "tool_calls" not in message
        assert parse_final_answer(message["content"]) == FinalAnswer(("P1", "P2"), True)

    def test_select_without_finish(self):
        message, _ = serialize_actions([Select(("P1",))], 1)
        assert json.loads(message["content"]) == {"select": ["P1"], "finish": False}


class TestDataModel:
    def test_select_needs_ids(self):
        with pytest.raises(ValueError):
            Select(())

    def test_retrieved_list_rank(self):
        retrieved = RetrievedList(("P3", "P1"))
        assert retrieved.rank("P1") == 2
        assert retrieved.rank("P9") is None
        assert "P3" in retrieved

    def test_trajectory_round_trip(self):
        result = ToolResult("global_search", "ok", [{"id": "P1", "node_type": "paper", "score": 1.5, "snippet": "x"}])
        step = Step(
            index=1,
            state_digest="abc",
            assistant_message={"role": "assistant", "content": ""},
            actions=[ToolCall("global_search", {"q": "graph"}, "call_1_0"), Select(("P1",)), Finish()],
            observations=[Observation("call_1_0", result)],
            notices=["Selected 1 node(s): P1."],
        )
        trajectory = Trajectory(
            query="graph",
            steps=[step],
            termination=Termination.FINISH,
            final_list=RetrievedList(("P1",)),
            query_id="q1",
            metadata={"seed": 0},
        )
        payload = json.loads(json.dumps(trajectory.to_dict()))
        restored = Trajectory.from_dict(payload)
        assert restored.to_dict() == trajectory.to_dict()
        assert restored.steps[0].finished
        assert len(restored.tool_calls()) == 1

    def test_error_result_serialisation(self):
        assert ToolResult("neighbors", "error", error="unknown node id 'P9'").to_dict() == {
            "tool": "neighbors", "status": "error", "results": [], "error": "unknown node id 'P9'",
        }
        assert "error" not in ToolResult("neighbors", "ok").to_dict()
