import os
from dataclasses import dataclass, replace
from typing import Optional

from kgscout_shared import get_config

POLICY_KINDS = ("scripted", "remote")
ANSWER_MODES = ("text", "tool")


@dataclass(frozen=True)
class PolicyConfig:
    """How an agent decides (policy backend) and how its loop is bounded."""
    kind: str = "scripted"
    max_steps: int = 20
    temperature: float = 0.7
    prompt_path: Optional[str] = None
    answer_mode: str = "text"
    script_path: Optional[str] = None

    model: str = "gpt-4.1"
    base_url: Optional[str] = None
    api_key: Optional[str] = None
    timeout_seconds: float = 60.0
    max_retries: int = 3
    retry_backoff_seconds: float = 1.0
    seed: Optional[int] = None

    observation_max_tokens: int = 2000
    context_max_tokens: int = 16384
    max_repairs: int = 1
    token_encoding: Optional[str] = "cl100k_base"

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"Unknown policy kind '{self.kind}', expected one of {POLICY_KINDS}")
        if self.answer_mode not in ANSWER_MODES:
            raise ValueError(f"Unknown answer mode '{self.answer_mode}', expected one of {ANSWER_MODES}")
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.max_retries < 0 or self.max_repairs < 0:
            raise ValueError("max_retries and max_repairs must be >= 0")

    def with_seed(self, seed: Optional[int]) -> "PolicyConfig":
        return replace(self, seed=seed)

    def resolve_api_key(self) -> Optional[str]:
        return self.api_key or os.getenv("OPENAI_API_KEY")

    @classmethod
    def from_config(cls) -> "PolicyConfig":
        return cls(
            kind=get_config("policy.kind"),
            max_steps=int(get_config("agent.max_steps")),
            temperature=float(get_config("policy.temperature")),
            prompt_path=get_config("policy.prompt_path", None),
            answer_mode=get_config("policy.answer_mode", "text"),
            script_path=get_config("policy.script_path", None),
            model=get_config("policy.model"),
            base_url=get_config("policy.base_url", None),
            api_key=get_config("policy.api_key", None),
            timeout_seconds=float(get_config("policy.timeout_seconds")),
            max_retries=int(get_config("policy.max_retries")),
            retry_backoff_seconds=float(get_config("policy.retry_backoff_seconds")),
            seed=get_config("agent.seed", None),
            observation_max_tokens=int(get_config("agent.observation_max_tokens")),
            context_max_tokens=int(get_config("agent.context_max_tokens")),
            max_repairs=int(get_config("agent.max_repairs")),
            token_encoding=get_config("agent.token_encoding", "cl100k_base"),
        )
