from typing import Optional

from .base import Policy, PolicyTurn, PolicyTransportError
from .scripted import ScriptedPolicy, ScriptError
from .remote import RemoteModelPolicy, SUBMIT_ANSWER_SCHEMA
from ..policy_config import PolicyConfig
from ..usage_tracker import UsageTracker


def make_policy(config: PolicyConfig, usage_tracker: Optional[UsageTracker] = None, logger=None) -> Policy:
    """Build the policy named by config.kind."""
    if config.kind == "scripted":
        if not config.script_path:
            raise ValueError("A scripted policy needs policy.script_path")
        return ScriptedPolicy.from_file(config.script_path, logger=logger)
    return RemoteModelPolicy(config, usage_tracker=usage_tracker, logger=logger)


def scripted_policy(script, logger=None) -> ScriptedPolicy:
    return ScriptedPolicy(script, logger=logger)


def remote_model_policy(config: PolicyConfig, usage_tracker: Optional[UsageTracker] = None, logger=None) -> RemoteModelPolicy:
    return RemoteModelPolicy(config, usage_tracker=usage_tracker, logger=logger)


__all__ = [
    'Policy',
    'PolicyTurn',
    'PolicyTransportError',
    'ScriptedPolicy',
    'ScriptError',
    'RemoteModelPolicy',
    'SUBMIT_ANSWER_SCHEMA',
    'make_policy',
    'scripted_policy',
    'remote_model_policy',
]
