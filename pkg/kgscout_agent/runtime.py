"""
The interactive retrieval loop: render state, ask the policy, execute tools, maintain the
retrieved list and stop on Finish, the step limit or a transport failure.
"""

from typing import Any, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from kgscout_shared import get_clean_logger
from .policies.base import Policy, PolicyTransportError
from .policy_config import PolicyConfig
from .prompting import StateRenderer, TokenCounter, load_system_prompt, state_digest
from .toolkit import Toolkit, ToolResult
from .trajectory import (
    SUBMIT_ANSWER,
    Finish,
    Observation,
    RetrievedList,
    Select,
    Step,
    Termination,
    ToolCall,
    Trajectory,
)

NO_ACTIONS_ERROR = "the reply contained no actions"


def apply_select(retrieved: Sequence[str], ids: Iterable[str], observed: Set[str]) -> Tuple[List[str], List[str]]:
    """
    Append selected ids to the retrieved list.

    Ids that no tool has returned so far are dropped; ids already present are skipped so the first
    selection keeps its rank. Returns the new list and the dropped ids.
    """
    updated = list(retrieved)
    present = set(updated)
    dropped: List[str] = []
    for node_id in ids:
        if node_id not in observed:
            if node_id not in dropped:
                dropped.append(node_id)
            continue
        if node_id in present:
            continue
        updated.append(node_id)
        present.add(node_id)
    return updated, dropped


def build_renderer(config: PolicyConfig, logger=None) -> StateRenderer:
    return StateRenderer(
        prompt=load_system_prompt(config.prompt_path),
        counter=TokenCounter(config.token_encoding, logger=logger),
        observation_max_tokens=config.observation_max_tokens,
        context_max_tokens=config.context_max_tokens,
        answer_mode=config.answer_mode,
        logger=logger,
    )


def _execute_call(call: ToolCall, toolkit: Toolkit) -> ToolResult:
    if call.tool == SUBMIT_ANSWER:
        # acknowledgement only; the selection itself arrives as Select/Finish actions
        if call.argument_error:
            return ToolResult(SUBMIT_ANSWER, "error", error=call.argument_error)
        return ToolResult(SUBMIT_ANSWER, "ok")
    if call.argument_error:
        return ToolResult(call.tool, "error", error=f"invalid arguments: {call.argument_error}")
    return toolkit.execute(call.tool, call.arguments)


def _selection_notices(added: Sequence[str], dropped: Sequence[str], size: int) -> List[str]:
    notices = []
    if added:
        notices.append(f"Selected {len(added)} node(s): {', '.join(added)}. The answer list now holds {size} node(s).")
    if dropped:
        notices.append(f"Ignored id(s) not returned by any tool so far: {', '.join(dropped)}.")
    return notices


async def run_agent(
    query: str,
    policy: Policy,
    toolkit: Toolkit,
    config: PolicyConfig,
    renderer: Optional[StateRenderer] = None,
    query_id: Optional[str] = None,
    metadata: Optional[Dict[str, Any]] = None,
    logger=None,
) -> Tuple[RetrievedList, Trajectory]:
    """
    Run one agent on one query.

    Within a step, tool calls and selections run in the order the policy gave them and Finish
    applies last. A malformed reply is fed back as an error notice; once more than
    config.max_repairs replies in a row are malformed the run is finished. A transport failure
    ends the run with termination=failed and the partial list.
    """
    logger = get_clean_logger("runtime", logger)
    renderer = renderer or build_renderer(config, logger=logger)
    tool_schemas = toolkit.tool_schemas()

    steps: List[Step] = []
    retrieved: List[str] = []
    observed: Set[str] = set()
    termination = Termination.STEP_LIMIT
    forced_finish = False
    failure: Optional[str] = None
    malformed_in_row = 0

    for step_index in range(1, config.max_steps + 1):
        messages = renderer.render(query, steps)
        try:
            turn = await policy.next_turn(messages, tool_schemas, tuple(steps))
        except PolicyTransportError as e:
            logger.warning(f"Policy failed at step {step_index} of query {query_id or query!r}: {e}")
            termination = Termination.FAILED
            failure = str(e)
            break

        step = Step(index=step_index, state_digest=state_digest(messages), assistant_message=turn.message)
        finished = False
        for action in turn.actions:
            if isinstance(action, ToolCall):
                result = _execute_call(action, toolkit)
                step.actions.append(action)
                step.observations.append(Observation(action.call_id, result))
                if result.ok:
                    observed.update(result.observed_ids())
            elif isinstance(action, Select):
                before = len(retrieved)
                retrieved, dropped = apply_select(retrieved, action.ids, observed)
                if dropped:
                    logger.warning(f"Step {step_index}: dropped unobserved selection(s) {dropped}")
                step.actions.append(action)
                step.notices.extend(_selection_notices(retrieved[before:], dropped, len(retrieved)))
            elif isinstance(action, Finish):
                finished = True

        error = turn.error or (None if turn.actions else NO_ACTIONS_ERROR)
        if error:
            step.error = error
            malformed_in_row += 1
            if malformed_in_row > config.max_repairs:
                logger.warning(f"Step {step_index}: {malformed_in_row} malformed replies in a row, finishing")
                finished = True
                forced_finish = True
            else:
                step.notices.append(f"Error: {error}")
        else:
            malformed_in_row = 0

        if finished:
            step.actions.append(Finish())
        steps.append(step)
        if finished:
            termination = Termination.FINISH
            break

    prompt = renderer.prompt
    trajectory = Trajectory(
        query=query,
        steps=steps,
        termination=termination,
        final_list=RetrievedList(tuple(retrieved)),
        query_id=query_id,
        forced_finish=forced_finish,
        failure=failure,
        metadata={
            "prompt_version": prompt.version,
            "prompt_sha256": prompt.sha256,
            "max_steps": config.max_steps,
            "seed": config.seed,
            **(metadata or {}),
        },
    )
    logger.debug(
        f"Query {query_id or query!r}: {len(steps)} step(s), termination={termination.value}, "
        f"{len(retrieved)} node(s) retrieved"
    )
    return trajectory.final_list, trajectory
