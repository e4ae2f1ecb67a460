"""Tests for vote-count rank fusion and parallel agents."""

import itertools
from collections import Counter

import pytest

from kgscout_agent import FusedEntry, Policy, PolicyTransportError, ScriptedPolicy, Termination, agent_seed, fuse, run_parallel


def direct_fusion(lists, limit=20):
    """Straightforward reading of the rule: decreasing frequency, then earliest position, then id."""
    frequency = Counter(node for ranked in lists for node in set(ranked))
    earliest = {}
    for ranked in lists:
        for position, node in enumerate(ranked):
            earliest[node] = min(earliest.get(node, position), position)
    ordered = sorted(frequency, key=lambda node: (-frequency[node], earliest[node], node))
    return [(node, frequency[node], earliest[node]) for node in ordered][:limit]


def as_tuples(ranking):
    return [(entry.id, entry.votes, entry.first_position) for entry in ranking.entries]


def all_lists(symbols="abcd", max_length=3):
    for length in range(max_length + 1):
        yield from itertools.permutations(symbols, length)


def selecting_script(ids):
    """Observes P1, P2 and P3 through two neighbor calls, then selects ids."""
    return {"steps": [
        [{"tool": "neighbors", "arguments": {"v": "A1"}}, {"tool": "neighbors", "arguments": {"v": "F1"}}],
        [{"select": list(ids)}, {"finish": True}],
    ]}


class FailingPolicy(Policy):
    async def next_turn(self, messages, tool_schemas, history):
        raise PolicyTransportError("unreachable")


class CrashingPolicy(Policy):
    async def next_turn(self, messages, tool_schemas, history):
        raise IndexError("list index out of range")


class TestFuse:
    def test_single_list_identity(self):
        assert as_tuples(fuse([["a", "b"]])) == [("a", 1, 0), ("b", 1, 1)]

    def test_hand_evaluated_example(self):
        assert as_tuples(fuse([["a", "b"], ["b", "c"], ["b"]])) == [("b", 3, 0), ("a", 1, 0), ("c", 1, 1)]

    def test_full_tie_orders_by_id(self):
        assert fuse([["a"], ["b"]]).ids == ["a", "b"]
        assert fuse([["b"], ["a"]]).ids == ["a", "b"]

    def test_empty_inputs(self):
        assert fuse([]).entries == []
        assert fuse([[], []]).entries == []

    def test_truncates_once_to_twenty(self):
        long_list = [f"n{i:02d}" for i in range(30)]
        ranking = fuse([long_list])
        assert len(ranking) == 20
        assert ranking.ids == long_list[:20]
        assert ranking.concatenated == long_list

    def test_nodes_past_twenty_in_one_list_can_still_win(self):
        first = [f"n{i:02d}" for i in range(25)]
        second = ["n24"]
        assert fuse([first, second]).entries[0] == FusedEntry("n24", 2, 0)

    def test_duplicates_within_a_list_vote_once(self):
        assert as_tuples(fuse([["a", "a", "b"]])) == [("a", 1, 0), ("b", 1, 2)]
        assert fuse([["a", "a", "b"], ["x", "c"]]).ids == ["a", "x", "c", "b"]

    def test_custom_limit(self):
        assert fuse([["a", "b", "c"]], limit=2).ids == ["a", "b"]
        with pytest.raises(ValueError):
            fuse([["a"]], limit=0)

    def test_exhaustive_triples_match_direct_rule(self):
        lists = list(all_lists())
        for triple in itertools.product(lists, repeat=3):
            expected = direct_fusion(triple)
            assert as_tuples(fuse(triple)) == expected, triple
            for permuted in itertools.permutations(triple):
                assert as_tuples(fuse(permuted)) == expected, permuted

    def test_ordering_invariants(self):
        ranking = fuse([["c", "a"], ["a", "d", "b"], ["b", "c"]])
        keys = [(-entry.votes, entry.first_position, entry.id) for entry in ranking.entries]
        assert keys == sorted(keys)


class TestAgentSeed:
    def test_offsets_base_seed(self):
        assert [agent_seed(7, i) for i in range(3)] == [7, 8, 9]

    def test_unseeded(self):
        assert agent_seed(None, 2) is None


class TestRunParallel:
    @pytest.mark.asyncio
    async def test_identical_agents_vote_together(self, toolkit, policy_config, renderer, script_policy):
        ranking, trajectories = await run_parallel(
            "q", lambda i: script_policy("q3"), 3, toolkit, policy_config, renderer=renderer, query_id="q3"
        )
        assert as_tuples(ranking) == [("P1", 3, 0)]
        assert ranking.status == "ok"
        assert len(trajectories) == 3
        assert [t.metadata["agent_index"] for t in trajectories] == [0, 1, 2]

    @pytest.mark.asyncio
    async def test_single_agent_matches_its_list(self, toolkit, policy_config, renderer):
        ranking, trajectories = await run_parallel(
            "q", lambda i: ScriptedPolicy(selecting_script(["P3", "P1"])), 1, toolkit, policy_config, renderer=renderer
        )
        assert ranking.ids == list(trajectories[0].final_list) == ["P3", "P1"]

    @pytest.mark.asyncio
    async def test_three_agents_fuse_by_votes(self, toolkit, policy_config, renderer):
        selections = [["P1", "P2"], ["P2", "P3"], ["P2"]]
        ranking, _ = await run_parallel(
            "q", lambda i: ScriptedPolicy(selecting_script(selections[i])), 3, toolkit, policy_config, renderer=renderer
        )
        assert as_tuples(ranking) == [("P2", 3, 0), ("P1", 1, 0), ("P3", 1, 1)]

    @pytest.mark.asyncio
    async def test_failed_agents_are_left_out(self, toolkit, policy_config, renderer, script_policy):
        factory = lambda i: FailingPolicy() if i == 1 else script_policy("q1")
        ranking, trajectories = await run_parallel("q", factory, 3, toolkit, policy_config, renderer=renderer)
        assert as_tuples(ranking) == [("P3", 2, 0)]
        assert ranking.successful_agents == 2
        assert ranking.total_agents == 3
        assert trajectories[1].termination == Termination.FAILED

    @pytest.mark.asyncio
    async def test_crashing_agent_is_left_out(self, toolkit, policy_config, renderer, script_policy):
        factory = lambda i: CrashingPolicy() if i == 1 else script_policy("q1")
        ranking, trajectories = await run_parallel("q", factory, 3, toolkit, policy_config, renderer=renderer)
        assert as_tuples(ranking) == [("P3", 2, 0)]
        assert ranking.successful_agents == 2
        assert trajectories[1].termination == Termination.FAILED
        assert trajectories[1].failure.startswith("IndexError")
        assert trajectories[1].metadata["agent_index"] == 1

    @pytest.mark.asyncio
    async def test_policy_factory_error_fails_one_agent(self, toolkit, policy_config, renderer, script_policy):
        def factory(i):
            if i == 0:
                raise ValueError("bad endpoint config")
            return script_policy("q1")

        ranking, trajectories = await run_parallel("q", factory, 2, toolkit, policy_config, renderer=renderer)
        assert ranking.ids == ["P3"]
        assert ranking.successful_agents == 1
        assert trajectories[0].failure == "ValueError: bad endpoint config"

    @pytest.mark.asyncio
    async def test_all_agents_failing(self, toolkit, policy_config, renderer):
        ranking, trajectories = await run_parallel(
            "q", lambda i: FailingPolicy(), 2, toolkit, policy_config, renderer=renderer
        )
        assert ranking.status == "failed"
        assert ranking.entries == []
        assert len(trajectories) == 2

    @pytest.mark.asyncio
    async def test_policies_are_closed(self, toolkit, policy_config, renderer, script_policy):
        closed = []

        def factory(i):
            policy = script_policy("finish_now")

            async def close():
                closed.append(i)
            policy.close = close
            return policy

        await run_parallel("q", factory, 3, toolkit, policy_config, renderer=renderer)
        assert sorted(closed) == [0, 1, 2]

    @pytest.mark.asyncio
    async def test_rejects_zero_agents(self, toolkit, policy_config):
        with pytest.raises(ValueError):
            await run_parallel("q", lambda i: FailingPolicy(), 0, toolkit, policy_config)
