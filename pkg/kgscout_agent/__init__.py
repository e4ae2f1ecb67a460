from .toolkit import (
    GLOBAL_SEARCH,
    NEIGHBORS,
    NeighborEntry,
    SearchHit,
    ToolBudget,
    ToolError,
    Toolkit,
    ToolResult,
    ToolSettings,
    TypeFilter,
)
from .trajectory import (
    SUBMIT_ANSWER,
    Action,
    AnswerFormatError,
    FinalAnswer,
    Finish,
    Observation,
    RetrievedList,
    Select,
    Step,
    Termination,
    ToolCall,
    Trajectory,
    parse_final_answer,
    serialize_actions,
)
from .prompting import StateRenderer, SystemPrompt, TokenCounter, load_system_prompt, render_state
from .policy_config import PolicyConfig
from .usage_tracker import UsageTracker
from .policies import (
    Policy,
    PolicyTransportError,
    PolicyTurn,
    RemoteModelPolicy,
    ScriptedPolicy,
    ScriptError,
    make_policy,
    remote_model_policy,
    scripted_policy,
)
from .runtime import apply_select, build_renderer, run_agent
from .fusion import FusedEntry, FusedRanking, agent_seed, fuse, run_parallel

__all__ = [
    'GLOBAL_SEARCH',
    'NEIGHBORS',
    'NeighborEntry',
    'SearchHit',
    'ToolBudget',
    'ToolError',
    'Toolkit',
    'ToolResult',
    'ToolSettings',
    'TypeFilter',
    'SUBMIT_ANSWER',
    'Action',
    'AnswerFormatError',
    'FinalAnswer',
    'Finish',
    'Observation',
    'RetrievedList',
    'Select',
    'Step',
    'Termination',
    'ToolCall',
    'Trajectory',
    'parse_final_answer',
    'serialize_actions',
    'StateRenderer',
    'SystemPrompt',
    'TokenCounter',
    'load_system_prompt',
    'render_state',
    'PolicyConfig',
    'UsageTracker',
    'Policy',
    'PolicyTransportError',
    'PolicyTurn',
    'RemoteModelPolicy',
    'ScriptedPolicy',
    'ScriptError',
    'make_policy',
    'remote_model_policy',
    'scripted_policy',
    'apply_select',
    'build_renderer',
    'run_agent',
    'FusedEntry',
    'FusedRanking',
    'agent_seed',
    'fuse',
    'run_parallel',
]
