"""
Trajectory data model: actions, steps, the retrieved list and the final-answer wire format.
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

from .toolkit import ToolResult

SUBMIT_ANSWER = "submit_answer"


@dataclass(frozen=True)
class ToolCall:
    tool: str
    arguments: Mapping[str, Any] = field(default_factory=dict)
    call_id: str = ""
    # set when the policy produced arguments that could not be decoded
    argument_error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        payload = {"kind": "tool_call", "tool": self.tool, "arguments": dict(self.arguments), "call_id": self.call_id}
        if self.argument_error is not None:
            payload["argument_error"] = self.argument_error
        return payload


@dataclass(frozen=True)
class Select:
    ids: Tuple[str, ...]

    def __post_init__(self):
        if not self.ids:
            raise ValueError("Select needs at least one node id")

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "select", "ids": list(self.ids)}


@dataclass(frozen=True)
class Finish:
    def to_dict(self) -> Dict[str, Any]:
        return {"kind": "finish"}


Action = Union[ToolCall, Select, Finish]


def action_from_dict(payload: Mapping[str, Any]) -> Action:
    kind = payload["kind"]
    if kind == "tool_call":
        return ToolCall(payload["tool"], dict(payload.get("arguments", {})), payload.get("call_id", ""), payload.get("argument_error"))
    if kind == "select":
        return Select(tuple(payload["ids"]))
    if kind == "finish":
        return Finish()
    raise ValueError(f"unknown action kind '{kind}'")


class Termination(str, Enum):
    FINISH = "finish"
    STEP_LIMIT = "step_limit"
    FAILED = "failed"


@dataclass(frozen=True)
class Observation:
    """Answer to one tool call of the assistant message, keyed by its call id."""
    call_id: str
    result: ToolResult

    def to_dict(self) -> Dict[str, Any]:
        return {"call_id": self.call_id, "result": self.result.to_dict()}

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "Observation":
        return cls(payload["call_id"], ToolResult.from_dict(payload["result"]))


@dataclass
class Step:
    index: int
    state_digest: str
    assistant_message: Dict[str, Any]
    actions: List[Action] = field(default_factory=list)
    observations: List[Observation] = field(default_factory=list)
    # selection acknowledgements, warnings and parse errors, shown to the policy as one user message
    notices: List[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def finished(self) -> bool:
        return any(isinstance(action, Finish) for action in self.actions)

    def tool_calls(self) -> List[ToolCall]:
        return [action for action in self.actions if isinstance(action, ToolCall)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "state_digest": self.state_digest,
            "assistant_message": self.assistant_message,
            "actions": [action.to_dict() for action in self.actions],
            "observations": [observation.to_dict() for observation in self.observations],
            "notices": list(self.notices),
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "Step":
        return cls(
            index=payload["index"],
            state_digest=payload["state_digest"],
            assistant_message=dict(payload["assistant_message"]),
            actions=[action_from_dict(action) for action in payload.get("actions", [])],
            observations=[Observation.from_dict(o) for o in payload.get("observations", [])],
            notices=list(payload.get("notices", [])),
            error=payload.get("error"),
        )


@dataclass(frozen=True)
class RetrievedList:
    """Ordered, duplicate-free list of selected node ids; earlier selections rank higher."""
    ids: Tuple[str, ...] = ()

    def __iter__(self) -> Iterator[str]:
        return iter(self.ids)

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self.ids

    def rank(self, node_id: str) -> Optional[int]:
        """1-based rank, None when absent."""
        try:
            return self.ids.index(node_id) + 1
        except ValueError:
            return None


@dataclass
class Trajectory:
    query: str
    steps: List[Step] = field(default_factory=list)
    termination: Termination = Termination.FINISH
    final_list: RetrievedList = field(default_factory=RetrievedList)
    query_id: Optional[str] = None
    forced_finish: bool = False
    failure: Optional[str] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return self.termination == Termination.FAILED

    def tool_calls(self) -> List[ToolCall]:
        return [call for step in self.steps for call in step.tool_calls()]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "query": self.query,
            "query_id": self.query_id,
            "termination": self.termination.value,
            "forced_finish": self.forced_finish,
            "failure": self.failure,
            "final_list": list(self.final_list.ids),
            "steps": [step.to_dict() for step in self.steps],
            "metadata": dict(self.metadata),
        }

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> "Trajectory":
        return cls(
            query=payload["query"],
            steps=[Step.from_dict(step) for step in payload.get("steps", [])],
            termination=Termination(payload["termination"]),
            final_list=RetrievedList(tuple(payload.get("final_list", []))),
            query_id=payload.get("query_id"),
            forced_finish=payload.get("forced_finish", False),
            failure=payload.get("failure"),
            metadata=dict(payload.get("metadata", {})),
        )


# -- final answer format --------------------------------------------------------------------------


class AnswerFormatError(ValueError):
    pass


@dataclass(frozen=True)
class FinalAnswer:
    select: Tuple[str, ...] = ()
    finish: bool = True

    def to_actions(self) -> List[Action]:
        actions: List[Action] = []
        if self.select:
            actions.append(Select(self.select))
        if self.finish:
            actions.append(Finish())
        return actions


def answer_from_mapping(payload: Any) -> FinalAnswer:
    """Validate a decoded {"select": [...], "finish": bool} object."""
    if not isinstance(payload, dict):
        raise AnswerFormatError("final answer must be a JSON object")
    unexpected = sorted(set(payload) - {"select", "finish"})
    if unexpected:
        raise AnswerFormatError(f"unexpected final answer field(s) {unexpected}")
    select = payload.get("select", [])
    if not isinstance(select, list) or not all(isinstance(node_id, (str, int)) and not isinstance(node_id, bool) for node_id in select):
        raise AnswerFormatError("'select' must be a list of node ids")
    finish = payload.get("finish", True)
    if not isinstance(finish, bool):
        raise AnswerFormatError("'finish' must be true or false")
    if not select and not finish:
        raise AnswerFormatError("final answer selects nothing and does not finish")
    return FinalAnswer(tuple(dict.fromkeys(str(node_id) for node_id in select)), finish)


def _strip_fence(text: str) -> str:
    text = text.strip()
    if text.startswith("```"):
        text = text.split("\n", 1)[1] if "\n" in text else ""
        if text.rstrip().endswith("```"):
            text = text.rstrip()[:-3]
    return text.strip()


def parse_final_answer(text: Optional[str]) -> Optional[FinalAnswer]:
    """
    Find the final answer object in assistant text.

    The last decodable JSON object carrying a "select" or "finish" key wins, so models may reason
    before answering. Returns None when the text has no such object; raises AnswerFormatError when
    one is present but invalid.
    """
    if not text or not text.strip():
        return None
    text = _strip_fence(text)
    decoder = json.JSONDecoder()
    candidate = None
    position = text.find("{")
    while position != -1:
        try:
            value, end = decoder.raw_decode(text, position)
        except json.JSONDecodeError:
            position = text.find("{", position + 1)
            continue
        if isinstance(value, dict) and ("select" in value or "finish" in value):
            candidate = value
        position = text.find("{", end)
    if candidate is None:
        return None
    return answer_from_mapping(candidate)


def serialize_answer(select: Sequence[str], finish: bool) -> str:
    return json.dumps({"finish": finish, "select": list(select)}, ensure_ascii=False, sort_keys=True)


def serialize_actions(actions: Sequence[Action], step_index: int) -> Tuple[Dict[str, Any], List[Action]]:
    """
    Assistant message for a list of actions, with call ids assigned.

    Tool calls become OpenAI-style tool_calls with ids call_<step>_<i>; selections and Finish
    become the final-answer JSON in the content. Returns the message and the actions with their
    ids filled in.
    """
    tool_calls = []
    numbered: List[Action] = []
    selected: List[str] = []
    finish = False
    for action in actions:
        if isinstance(action, ToolCall):
            call_id = action.call_id or f"call_{step_index}_{len(tool_calls)}"
            tool_calls.append({
                "id": call_id,
                "type": "function",
                "function": {
                    "name": action.tool,
                    "arguments": json.dumps(dict(action.arguments), ensure_ascii=False, sort_keys=True),
                },
            })
            numbered.append(ToolCall(action.tool, action.arguments, call_id, action.argument_error))
        else:
            if isinstance(action, Select):
                selected.extend(action.ids)
            else:
                finish = True
            numbered.append(action)

    message: Dict[str, Any] = {
        "role": "assistant",
        "content": serialize_answer(selected, finish) if (selected or finish) else "",
    }
    if tool_calls:
        message["tool_calls"] = tool_calls
    return message, numbered
