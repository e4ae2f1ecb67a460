"""
Renders an agent state (query plus interaction history) into the chat messages a policy sees.
"""

import hashlib
import json
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

import tiktoken

from kgscout_shared import get_clean_logger
from .toolkit import ToolResult
from .trajectory import Step

DEFAULT_PROMPT_PATH = os.path.join(os.path.dirname(os.path.abspath(__file__)), "prompts", "system_prompt.md")

ELISION_MARKER = "\n[... observation truncated to {cap} of {total} tokens ...]"

# per-message framing tokens added by chat templates
MESSAGE_OVERHEAD_TOKENS = 4

ANSWER_PROTOCOLS = {
    "text": (
        "When you want to add nodes to your answer, reply with a JSON object of the form\n"
        '{"select": ["<node id>", ...], "finish": true}\n'
        "Use \"finish\": false to keep exploring after the selection. Selecting nothing with "
        '{"select": [], "finish": true} ends the search without further results.'
    ),
    "tool": (
        "When you want to add nodes to your answer, call the submit_answer function with the ids "
        "to select and finish=true to end the search, or finish=false to keep exploring."
    ),
}

_encodings: Dict[str, Any] = {}


class TokenCounter:
    """Token estimates for the context budget; falls back to ~4 characters per token."""

    def __init__(self, encoding_name: Optional[str] = "cl100k_base", logger=None):
        self.logger = get_clean_logger("token_counter", logger)
        self.encoding = None
        self.encoding_name = encoding_name
        if encoding_name:
            try:
                if encoding_name not in _encodings:
                    _encodings[encoding_name] = tiktoken.get_encoding(encoding_name)
                self.encoding = _encodings[encoding_name]
            except Exception as e:
                self.logger.warning(f"Tokenizer {encoding_name} unavailable ({e}), using character estimate")

    def count(self, text: str) -> int:
        if not text:
            return 0
        if self.encoding is not None:
            return len(self.encoding.encode(text, disallowed_special=()))
        return len(text) // 4

    def _head(self, text: str, max_tokens: int) -> str:
        if max_tokens <= 0:
            return ""
        if self.encoding is None:
            return text[: max_tokens * 4]
        head = self.encoding.decode(self.encoding.encode(text, disallowed_special=())[:max_tokens])
        # decoding can merge a split multi-byte sequence into one more token
        while head and self.count(head) > max_tokens:
            head = head[:-1]
        return head

    def truncate(self, text: str, max_tokens: int) -> str:
        """Cut text to at most max_tokens, ending in an elision marker when anything was removed."""
        total = self.count(text)
        if total <= max_tokens:
            return text
        marker = ELISION_MARKER.format(total=total, cap=max_tokens)
        head = self._head(text, max_tokens - self.count(marker))
        while head and self.count(head + marker) > max_tokens:
            head = head[:-1]
        return head + marker


@dataclass(frozen=True)
class SystemPrompt:
    text: str
    version: str
    sha256: str


def load_system_prompt(path: Optional[str] = None) -> SystemPrompt:
    """
    Load the versioned prompt asset. The first line reads "version: <v>"; the rest is the prompt.
    """
    path = path or DEFAULT_PROMPT_PATH
    with open(path, "r", encoding="utf-8") as file:
        raw = file.read()
    header, _, body = raw.partition("\n")
    if not header.startswith("version:"):
        raise ValueError(f"Prompt asset {path} must start with a 'version:' line")
    version = header.split(":", 1)[1].strip()
    text = body.strip("\n")
    return SystemPrompt(text=text, version=version, sha256=hashlib.sha256(raw.encode("utf-8")).hexdigest())


def render_observation(result: ToolResult) -> str:
    return json.dumps(result.to_dict(), ensure_ascii=False, sort_keys=True)


def state_digest(messages: Sequence[Dict[str, Any]]) -> str:
    canonical = json.dumps(list(messages), ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class StateRenderer:
    """
    Deterministic state rendering.

    Order: system prompt, user query, then per step the assistant message, one tool message per
    tool call (in call order) and, when the step produced notices and did not finish, one user
    message with them. Each observation is capped at observation_max_tokens; when the whole
    context would exceed context_max_tokens every observation cap is lowered by the same amount
    (never below min_observation_tokens) instead of dropping history.
    """

    def __init__(
        self,
        prompt: Optional[SystemPrompt] = None,
        counter: Optional[TokenCounter] = None,
        observation_max_tokens: int = 2000,
        context_max_tokens: int = 16384,
        answer_mode: str = "text",
        min_observation_tokens: int = 256,
        logger=None,
    ):
        if answer_mode not in ANSWER_PROTOCOLS:
            raise ValueError(f"Unknown answer mode '{answer_mode}', expected one of {sorted(ANSWER_PROTOCOLS)}")
        self.logger = get_clean_logger("prompting", logger)
        self.prompt = prompt or load_system_prompt()
        self.counter = counter or TokenCounter(logger=logger)
        self.observation_max_tokens = observation_max_tokens
        self.context_max_tokens = context_max_tokens
        self.min_observation_tokens = min(min_observation_tokens, observation_max_tokens)
        self.answer_mode = answer_mode
        self.system_text = self.prompt.text.replace("{answer_protocol}", ANSWER_PROTOCOLS[answer_mode])

    def count_message(self, message: Dict[str, Any]) -> int:
        tokens = MESSAGE_OVERHEAD_TOKENS + self.counter.count(message.get("content") or "")
        for call in message.get("tool_calls", ()):
            function = call.get("function", {})
            tokens += self.counter.count(function.get("name", "")) + self.counter.count(function.get("arguments", ""))
        return tokens

    def count_messages(self, messages: Sequence[Dict[str, Any]]) -> int:
        return sum(self.count_message(message) for message in messages)

    def _render(self, query: str, steps: Sequence[Step], observation_cap: int) -> List[Dict[str, Any]]:
        messages: List[Dict[str, Any]] = [
            {"role": "system", "content": self.system_text},
            {"role": "user", "content": query},
        ]
        for step in steps:
            assistant = dict(step.assistant_message)
            assistant["role"] = "assistant"
            messages.append(assistant)
            for observation in step.observations:
                messages.append({
                    "role": "tool",
                    "tool_call_id": observation.call_id,
                    "content": self.counter.truncate(render_observation(observation.result), observation_cap),
                })
            if step.notices and not step.finished:
                messages.append({"role": "user", "content": "\n".join(step.notices)})
        return messages

    def render(self, query: str, steps: Sequence[Step]) -> List[Dict[str, Any]]:
        messages = self._render(query, steps, self.observation_max_tokens)
        total = self.count_messages(messages)
        if total <= self.context_max_tokens:
            return messages

        tool_messages = [message for message in messages if message["role"] == "tool"]
        if not tool_messages:
            return messages
        fixed = total - sum(self.counter.count(message["content"]) for message in tool_messages)
        cap = (self.context_max_tokens - fixed) // len(tool_messages)
        cap = max(self.min_observation_tokens, min(cap, self.observation_max_tokens))
        self.logger.warning(
            f"Context of {total} tokens exceeds {self.context_max_tokens}; "
            f"capping {len(tool_messages)} observations at {cap} tokens"
        )
        return self._render(query, steps, cap)


def render_state(query: str, steps: Sequence[Step], renderer: Optional[StateRenderer] = None) -> List[Dict[str, Any]]:
    return (renderer or StateRenderer()).render(query, steps)
