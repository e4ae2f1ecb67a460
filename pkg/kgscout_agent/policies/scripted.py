"""
Deterministic policy replaying a script of actions, used for tests, fixtures and pipeline dry runs.

Script format (JSON):
  {"steps": {"1": [action, ...], "2": [...]},            or a list, step 1 first
   "rules": [{"match": {"tool": "global_search", "status": "ok"}, "actions": [...]}]}

Actions: {"tool": name, "arguments": {...}}, {"select": [ids]}, {"select_top": n}, {"finish": true}.
select_top takes the first n result ids of the last tool observation of the previous step.
An explicit step entry wins over rules; otherwise the first rule matching the last observation
applies; with nothing applicable the policy finishes.
"""

import json
from typing import Any, Dict, List, Mapping, Optional, Sequence

from kgscout_shared import get_clean_logger
from kgscout_shared.schemas import first_error
from ..toolkit import ToolResult
from ..trajectory import Action, Finish, Select, Step, ToolCall, serialize_actions
from .base import Policy, PolicyTurn


class ScriptError(ValueError):
    pass


def _last_observation(history: Sequence[Step]) -> Optional[ToolResult]:
    if not history or not history[-1].observations:
        return None
    return history[-1].observations[-1].result


def _matches(match: Mapping[str, Any], observation: Optional[ToolResult]) -> bool:
    if not match:
        return True
    if observation is None:
        return False
    if "tool" in match and observation.tool != match["tool"]:
        return False
    if "status" in match and observation.status != match["status"]:
        return False
    return True


class ScriptedPolicy(Policy):
    def __init__(self, script: Mapping[str, Any], name: str = "script", logger=None):
        self.logger = get_clean_logger("scripted_policy", logger)
        error = first_error("POLICY_SCRIPT", script)
        if error:
            raise ScriptError(f"Invalid policy script '{name}' {error}")
        self.name = name
        steps = script.get("steps", {})
        if isinstance(steps, list):
            self.steps: Dict[int, List[Dict[str, Any]]] = {i + 1: list(actions) for i, actions in enumerate(steps)}
        else:
            self.steps = {int(index): list(actions) for index, actions in steps.items()}
        self.rules: List[Dict[str, Any]] = list(script.get("rules", []))

    @classmethod
    def from_file(cls, path, logger=None) -> "ScriptedPolicy":
        with open(path, "r", encoding="utf-8") as file:
            try:
                script = json.load(file)
            except json.JSONDecodeError as e:
                raise ScriptError(f"Policy script {path} is not valid JSON: {e}") from None
        return cls(script, name=str(path), logger=logger)

    def _script_for(self, step_index: int, observation: Optional[ToolResult]) -> List[Dict[str, Any]]:
        if step_index in self.steps:
            return self.steps[step_index]
        for rule in self.rules:
            if _matches(rule.get("match", {}), observation):
                return rule["actions"]
        return []

    @staticmethod
    def _to_actions(entries: Sequence[Mapping[str, Any]], observation: Optional[ToolResult]) -> List[Action]:
        actions: List[Action] = []
        for entry in entries:
            if "tool" in entry:
                actions.append(ToolCall(entry["tool"], dict(entry.get("arguments", {}))))
            elif "select" in entry:
                actions.append(Select(tuple(entry["select"])))
            elif "select_top" in entry:
                ids = observation.observed_ids()[: entry["select_top"]] if observation is not None and observation.ok else []
                if ids:
                    actions.append(Select(tuple(ids)))
            elif entry.get("finish"):
                actions.append(Finish())
        return actions

    async def next_turn(self, messages, tool_schemas, history: Sequence[Step]) -> PolicyTurn:
        step_index = len(history) + 1
        observation = _last_observation(history)
        actions = self._to_actions(self._script_for(step_index, observation), observation)
        if not actions:
            self.logger.debug(f"Script '{self.name}' has nothing for step {step_index}, finishing")
            actions = [Finish()]
        message, actions = serialize_actions(actions, step_index)
        return PolicyTurn(message=message, actions=actions)
