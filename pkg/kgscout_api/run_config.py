import os
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from kgscout_shared import get_config
from kgscout_shared.config import PROJECT_ROOT
from kgscout_graph import Bm25Params, load_bundle
from kgscout_graph.bundle import MANIFEST_FILE
from kgscout_agent import (
    Policy,
    PolicyConfig,
    ToolBudget,
    Toolkit,
    ToolSettings,
    UsageTracker,
    agent_seed,
    make_policy,
)


def resolve_path(path: Optional[str]) -> Optional[Path]:
    """Relative paths in the config file are taken from the project root."""
    if path is None:
        return None
    path = Path(path)
    if not path.is_absolute() and not path.exists():
        return Path(PROJECT_ROOT) / path
    return path


@dataclass(frozen=True)
class RunConfig:
    bundle_path: Path
    nodes_path: Optional[Path]
    edges_path: Optional[Path]
    manifest_path: Optional[Path]
    bm25: Bm25Params
    budget: ToolBudget
    tool_settings: ToolSettings
    policy: PolicyConfig
    n_agents: int = 3
    fusion_limit: int = 20
    eval_concurrency: int = 4
    host: str = "127.0.0.1"
    port: int = 8080

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError(f"n_agents must be >= 1, got {self.n_agents}")
        if self.fusion_limit < 1:
            raise ValueError(f"fusion_limit must be >= 1, got {self.fusion_limit}")

    @classmethod
    def from_config(cls) -> "RunConfig":
        return cls(
            bundle_path=resolve_path(get_config("graph.bundle_path")),
            nodes_path=resolve_path(get_config("graph.nodes_path", None)),
            edges_path=resolve_path(get_config("graph.edges_path", None)),
            manifest_path=resolve_path(get_config("graph.manifest_path", None)),
            bm25=Bm25Params(k1=float(get_config("index.k1")), b=float(get_config("index.b"))),
            budget=ToolBudget(
                search_default_k=int(get_config("tools.search_default_k")),
                neighbor_k=int(get_config("tools.neighbor_k")),
            ),
            tool_settings=ToolSettings(
                snippet_chars=int(get_config("tools.snippet_chars")),
                query_ranking=bool(get_config("tools.query_ranking")),
                type_filtering=bool(get_config("tools.type_filtering")),
                neighbors_enabled=bool(get_config("tools.neighbors_enabled")),
            ),
            policy=PolicyConfig.from_config(),
            n_agents=int(get_config("agent.n_agents")),
            fusion_limit=int(get_config("agent.fusion_limit")),
            eval_concurrency=int(get_config("evaluation.concurrency")),
            host=get_config("service.host"),
            port=int(get_config("service.port")),
        )

    def validate_bundle(self):
        if not (self.bundle_path / MANIFEST_FILE).exists():
            raise FileNotFoundError(f"No graph bundle at {self.bundle_path}; run 'kgscout index' first")

    def validate_sources(self):
        for label, path in (("nodes", self.nodes_path), ("edges", self.edges_path), ("manifest", self.manifest_path)):
            if path is None or not os.path.exists(path):
                raise FileNotFoundError(f"Graph {label} file not found: {path}")

    def validate_policy(self):
        if self.policy.kind == "scripted":
            if not self.policy.script_path or not os.path.exists(self.policy.script_path):
                raise FileNotFoundError(f"Policy script not found: {self.policy.script_path}")

    def load_toolkit(self, logger=None) -> Toolkit:
        self.validate_bundle()
        graph, index = load_bundle(self.bundle_path, logger=logger)
        return Toolkit(graph, index, self.budget, self.tool_settings, logger=logger)

    def policy_factory(self, usage_tracker: Optional[UsageTracker] = None, logger=None) -> Callable[[int], Policy]:
        """Agent i gets seed base_seed + i."""
        def factory(agent_index: int) -> Policy:
            config = self.policy.with_seed(agent_seed(self.policy.seed, agent_index))
            return make_policy(config, usage_tracker=usage_tracker, logger=logger)
        return factory
