import asyncio
import json
from typing import Any, Dict, List, Optional, Sequence

from openai import AsyncOpenAI, APIConnectionError, APIStatusError, RateLimitError

from kgscout_shared import get_clean_logger
from ..policy_config import PolicyConfig
from ..trajectory import (
    SUBMIT_ANSWER,
    Action,
    AnswerFormatError,
    FinalAnswer,
    Step,
    ToolCall,
    answer_from_mapping,
    parse_final_answer,
)
from ..usage_tracker import UsageTracker
from .base import Policy, PolicyTransportError, PolicyTurn

SUBMIT_ANSWER_SCHEMA = {
    "type": "function",
    "function": {
        "name": SUBMIT_ANSWER,
        "description": (
            "Add nodes to the ranked answer list (earlier ids rank higher) and optionally end the search."
        ),
        "parameters": {
            "type": "object",
            "properties": {
                "select": {
                    "type": "array",
                    "items": {"type": "string"},
                    "description": "Ids of nodes returned by earlier tool calls, best first.",
                },
                "finish": {
                    "type": "boolean",
                    "default": True,
                    "description": "true to end the search after this selection.",
                },
            },
            "required": ["select"],
        },
    },
}

NO_ACTION_ERROR = (
    "Your reply contained neither a tool call nor a final answer. Call a tool, or answer with "
    '{"select": [...], "finish": true}.'
)
EMPTY_REPLY_ERROR = "The model endpoint returned an empty reply. Call a tool, or give your final answer."


class RemoteModelPolicy(Policy):
    """Policy backed by an OpenAI-compatible chat completion endpoint with tool calling."""

    def __init__(
        self,
        config: PolicyConfig,
        usage_tracker: Optional[UsageTracker] = None,
        client: Optional[AsyncOpenAI] = None,
        logger=None,
    ):
        self.logger = get_clean_logger("remote_policy", logger)
        self.config = config
        self.usage_tracker = usage_tracker
        self._owns_client = client is None
        if client is None:
            api_key = config.resolve_api_key()
            if not api_key:
                raise ValueError("Model endpoint API key is required. Set policy.api_key or OPENAI_API_KEY.")
            # retries are handled here so backoff and logging stay in one place
            client = AsyncOpenAI(
                api_key=api_key,
                base_url=config.base_url,
                timeout=config.timeout_seconds,
                max_retries=0,
            )
        self.client = client

    def _request(self, messages: List[Dict[str, Any]], tool_schemas: List[Dict[str, Any]]) -> Dict[str, Any]:
        tools = list(tool_schemas)
        if self.config.answer_mode == "tool":
            tools.append(SUBMIT_ANSWER_SCHEMA)
        request: Dict[str, Any] = {
            "model": self.config.model,
            "messages": messages,
            "temperature": self.config.temperature,
        }
        if tools:
            request["tools"] = tools
        if self.config.seed is not None:
            request["seed"] = self.config.seed
        return request

    async def _complete(self, request: Dict[str, Any]):
        last_error: Optional[Exception] = None
        attempts = self.config.max_retries + 1
        for attempt in range(attempts):
            try:
                return await self.client.chat.completions.create(**request)
            except (APIConnectionError, RateLimitError) as e:
                last_error = e
            except APIStatusError as e:
                if e.status_code < 500:
                    raise PolicyTransportError(f"Model endpoint rejected the request ({e.status_code}): {e}") from e
                last_error = e
            if attempt + 1 < attempts:
                delay = self.config.retry_backoff_seconds * 2 ** attempt
                self.logger.warning(f"Model call failed ({last_error}), retry {attempt + 1}/{self.config.max_retries} in {delay:.1f}s")
                await asyncio.sleep(delay)
        raise PolicyTransportError(f"Model endpoint unavailable after {attempts} attempt(s): {last_error}") from last_error

    def _track_usage(self, response):
        usage = getattr(response, "usage", None)
        if self.usage_tracker is None or usage is None:
            return
        self.usage_tracker.add_usage(
            "remote_policy",
            getattr(response, "model", None) or self.config.model,
            prompt_tokens=getattr(usage, "prompt_tokens", 0) or 0,
            completion_tokens=getattr(usage, "completion_tokens", 0) or 0,
        )

    async def next_turn(self, messages, tool_schemas, history: Sequence[Step]) -> PolicyTurn:
        response = await self._complete(self._request(messages, tool_schemas))
        self._track_usage(response)
        if not response.choices:
            self.logger.warning("Model endpoint returned no choices")
            return PolicyTurn(message={"role": "assistant", "content": ""}, error=EMPTY_REPLY_ERROR)
        return self.parse_reply(response.choices[0].message)

    def parse_reply(self, reply) -> PolicyTurn:
        """Map an assistant reply to actions: tool calls first, then the final answer."""
        content = reply.content or ""
        message: Dict[str, Any] = {"role": "assistant", "content": content}
        actions: List[Action] = []
        answers: List[FinalAnswer] = []
        errors: List[str] = []

        raw_calls = reply.tool_calls or []
        if raw_calls:
            message["tool_calls"] = [
                {
                    "id": call.id,
                    "type": "function",
                    "function": {"name": call.function.name, "arguments": call.function.arguments or ""},
                }
                for call in raw_calls
            ]
        for call in raw_calls:
            arguments, argument_error = self._decode_arguments(call.function.arguments)
            actions.append(ToolCall(call.function.name, arguments, call.id, argument_error))
            if call.function.name == SUBMIT_ANSWER and argument_error is None:
                try:
                    answers.append(answer_from_mapping(arguments))
                except AnswerFormatError as e:
                    errors.append(f"Invalid {SUBMIT_ANSWER} arguments: {e}")

        try:
            answer = parse_final_answer(content)
            if answer is not None:
                answers.append(answer)
        except AnswerFormatError as e:
            errors.append(f"Invalid final answer: {e}")

        for answer in answers:
            actions.extend(answer.to_actions())

        if not actions and not errors:
            errors.append(NO_ACTION_ERROR)
        return PolicyTurn(message=message, actions=actions, error="; ".join(errors) or None)

    @staticmethod
    def _decode_arguments(raw: Optional[str]):
        if raw is None or not raw.strip():
            return {}, None
        try:
            arguments = json.loads(raw)
        except json.JSONDecodeError as e:
            return {}, f"arguments are not valid JSON: {e.msg}"
        if not isinstance(arguments, dict):
            return {}, "arguments must be a JSON object"
        return arguments, None

    async def close(self):
        if self._owns_client:
            await self.client.close()
