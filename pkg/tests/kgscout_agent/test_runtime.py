"""Tests for the interactive retrieval loop."""

from typing import List
from unittest.mock import MagicMock

import pytest

from kgscout_agent import (
    Finish,
    Policy,
    PolicyConfig,
    PolicyTransportError,
    PolicyTurn,
    ScriptedPolicy,
    Select,
    Termination,
    ToolCall,
    apply_select,
    run_agent,
)


class CannedPolicy(Policy):
    """Replays a fixed list of turns; raising entries are raised."""

    def __init__(self, turns: List):
        self.turns = list(turns)
        self.calls = 0

    async def next_turn(self, messages, tool_schemas, history):
        turn = self.turns[min(self.calls, len(self.turns) - 1)]
        self.calls += 1
        if isinstance(turn, Exception):
            raise turn
        return turn


def turn(*actions, error=None):
    return PolicyTurn(message={"role": "assistant", "content": "..."}, actions=list(actions), error=error)


class TestApplySelect:
    def test_append(self):
        assert apply_select([], ["a", "b"], {"a", "b"}) == (["a", "b"], [])

    def test_duplicates_are_skipped(self):
        assert apply_select(["a"], ["a", "c"], {"a", "c"}) == (["a", "c"], [])

    def test_unobserved_ids_are_dropped(self):
        assert apply_select([], ["x"], set()) == ([], ["x"])

    def test_order_is_kept(self):
        assert apply_select(["b"], ["d", "x", "a"], {"a", "b", "d"}) == (["b", "d", "a"], ["x"])


class TestRunAgent:
    @pytest.mark.asyncio
    async def test_immediate_finish(self, toolkit, policy_config, renderer, script_policy):
        retrieved, trajectory = await run_agent("anything", script_policy("finish_now"), toolkit, policy_config, renderer)
        assert list(retrieved) == []
        assert len(trajectory.steps) == 1
        assert trajectory.termination == Termination.FINISH

    @pytest.mark.asyncio
    async def test_search_then_select(self, toolkit, policy_config, renderer, script_policy):
        retrieved, trajectory = await run_agent(
            "protein folding pathways", script_policy("q1"), toolkit, policy_config, renderer, query_id="q1"
        )
        assert list(retrieved) == ["P3"]
        assert trajectory.termination == Termination.FINISH
        assert [step.index for step in trajectory.steps] == [1, 2]
        assert trajectory.steps[-1].finished
        assert trajectory.query_id == "q1"

    @pytest.mark.asyncio
    async def test_never_finishing_hits_step_limit(self, toolkit, policy_config, renderer, script_policy):
        retrieved, trajectory = await run_agent("graph", script_policy("never_finish"), toolkit, policy_config, renderer)
        assert len(trajectory.steps) == 20
        assert trajectory.termination == Termination.STEP_LIMIT
        assert not trajectory.steps[-1].finished
        assert list(retrieved) == []

    @pytest.mark.asyncio
    async def test_two_hop_traversal(self, toolkit, policy_config, renderer):
        policy = ScriptedPolicy({"steps": {
            "1": [{"tool": "global_search", "arguments": {"q": "machine learning", "k": 1}}],
            "2": [{"tool": "neighbors", "arguments": {"v": "F1"}}],
            "3": [{"select_top": 2}, {"finish": True}],
        }})
        retrieved, _ = await run_agent("papers in machine learning", policy, toolkit, policy_config, renderer)
        assert set(retrieved) == {"P1", "P3"}

    @pytest.mark.asyncio
    async def test_select_rule_over_search(self, toolkit, policy_config, renderer, fix7_index):
        policy = ScriptedPolicy({
            "steps": {"1": [{"tool": "global_search", "arguments": {"q": "kinetics enzyme"}}]},
            "rules": [{"match": {"tool": "global_search", "status": "ok"}, "actions": [{"select_top": 1}, {"finish": True}]}],
        })
        retrieved, _ = await run_agent("enzymes", policy, toolkit, policy_config, renderer)
        assert list(retrieved) == [fix7_index.top_k_global("kinetics enzyme", 1)[0].id]

    @pytest.mark.asyncio
    async def test_select_then_finish_in_one_step(self, toolkit, policy_config, renderer):
        policy = CannedPolicy([
            turn(ToolCall("global_search", {"q": "citation"}, "c1")),
            turn(Finish(), Select(("P2",))),
        ])
        retrieved, trajectory = await run_agent("q", policy, toolkit, policy_config, renderer)
        assert list(retrieved) == ["P2"]
        assert isinstance(trajectory.steps[-1].actions[-1], Finish)

    @pytest.mark.asyncio
    async def test_unobserved_selection_is_dropped_with_notice(self, toolkit, policy_config, renderer):
        policy = CannedPolicy([
            turn(ToolCall("global_search", {"q": "citation"}, "c1"), Select(("P2", "P4"))),
            turn(Finish()),
        ])
        retrieved, trajectory = await run_agent("q", policy, toolkit, policy_config, renderer, logger=MagicMock())
        assert list(retrieved) == ["P2"]
        assert any("P4" in notice for notice in trajectory.steps[0].notices)

    @pytest.mark.asyncio
    async def test_unknown_tool_is_observed_as_error(self, toolkit, policy_config, renderer):
        policy = CannedPolicy([turn(ToolCall("shortest_path", {}, "c1")), turn(Finish())])
        _, trajectory = await run_agent("q", policy, toolkit, policy_config, renderer)
        assert trajectory.steps[0].observations[0].result.status == "error"
        assert len(trajectory.steps) == 2

    @pytest.mark.asyncio
    async def test_argument_errors_become_observations(self, toolkit, policy_config, renderer):
        call = ToolCall("neighbors", {}, "c1", argument_error="arguments are not valid JSON")
        policy = CannedPolicy([turn(call), turn(Finish())])
        _, trajectory = await run_agent("q", policy, toolkit, policy_config, renderer)
        assert "not valid JSON" in trajectory.steps[0].observations[0].result.error

    @pytest.mark.asyncio
    async def test_one_repair_turn_then_forced_finish(self, toolkit, policy_config, renderer):
        policy = CannedPolicy([turn(error="no actions")])
        _, trajectory = await run_agent("q", policy, toolkit, policy_config, renderer)
        assert len(trajectory.steps) == 2
        assert trajectory.steps[0].notices == ["Error: no actions"]
        assert trajectory.forced_finish
        assert trajectory.termination == Termination.FINISH

    @pytest.mark.asyncio
    async def test_repair_succeeds(self, toolkit, policy_config, renderer):
        policy = CannedPolicy([turn(error="bad json"), turn(Finish())])
        _, trajectory = await run_agent("q", policy, toolkit, policy_config, renderer)
        assert not trajectory.forced_finish
        assert len(trajectory.steps) == 2

    @pytest.mark.asyncio
    async def test_transport_failure_keeps_partial_list(self, toolkit, policy_config, renderer):
        policy = CannedPolicy([
            turn(ToolCall("global_search", {"q": "citation"}, "c1"), Select(("P2",))),
            PolicyTransportError("endpoint down"),
        ])
        retrieved, trajectory = await run_agent("q", policy, toolkit, policy_config, renderer, logger=MagicMock())
        assert list(retrieved) == ["P2"]
        assert trajectory.termination == Termination.FAILED
        assert trajectory.failure == "endpoint down"
        assert len(trajectory.steps) == 1

    @pytest.mark.asyncio
    async def test_custom_step_limit(self, toolkit, renderer, script_policy):
        config = PolicyConfig(kind="scripted", max_steps=3, token_encoding=None)
        _, trajectory = await run_agent("graph", script_policy("never_finish"), toolkit, config, renderer)
        assert len(trajectory.steps) == 3

    @pytest.mark.asyncio
    async def test_scripted_runs_are_deterministic(self, toolkit, policy_config, renderer, script_policy):
        _, first = await run_agent("q", script_policy("q3"), toolkit, policy_config, renderer, query_id="q3")
        _, second = await run_agent("q", script_policy("q3"), toolkit, policy_config, renderer, query_id="q3")
        assert first.to_dict() == second.to_dict()
        assert list(first.final_list) == ["P1"]

    @pytest.mark.asyncio
    async def test_metadata(self, toolkit, policy_config, renderer, script_policy):
        _, trajectory = await run_agent(
            "q", script_policy("finish_now"), toolkit, policy_config, renderer, metadata={"agent_index": 2}
        )
        assert trajectory.metadata["prompt_version"] == "1"
        assert trajectory.metadata["max_steps"] == 20
        assert trajectory.metadata["agent_index"] == 2
