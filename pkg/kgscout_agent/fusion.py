"""
Parallel agents and vote-count rank fusion.

Fused order: more votes first, then the earliest position the node reached in any single agent's
list, then ascending node id. Nothing in the key depends on agent order.
"""

import asyncio
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from kgscout_shared import get_clean_logger
from .policies.base import Policy
from .policy_config import PolicyConfig
from .prompting import StateRenderer
from .runtime import build_renderer, run_agent
from .toolkit import Toolkit
from .trajectory import Termination, Trajectory

DEFAULT_FUSION_LIMIT = 20


@dataclass(frozen=True)
class FusedEntry:
    id: str
    votes: int
    first_position: int

    def to_dict(self) -> Dict[str, Any]:
        return {"id": self.id, "votes": self.votes, "first_position": self.first_position}


@dataclass
class FusedRanking:
    entries: List[FusedEntry] = field(default_factory=list)
    limit: int = DEFAULT_FUSION_LIMIT
    # concatenation of the agent lists, kept for provenance
    concatenated: List[str] = field(default_factory=list)
    status: str = "ok"
    successful_agents: int = 0
    total_agents: int = 0

    @property
    def ids(self) -> List[str]:
        return [entry.id for entry in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "status": self.status,
            "limit": self.limit,
            "successful_agents": self.successful_agents,
            "total_agents": self.total_agents,
            "entries": [entry.to_dict() for entry in self.entries],
            "concatenated": list(self.concatenated),
        }


def fuse(lists: Sequence[Sequence[str]], limit: int = DEFAULT_FUSION_LIMIT) -> FusedRanking:
    if limit < 1:
        raise ValueError(f"limit must be >= 1, got {limit}")
    votes: Dict[str, int] = {}
    first_position: Dict[str, int] = {}
    concatenated: List[str] = []
    for ranked in lists:
        concatenated.extend(ranked)
        seen = set()
        for position, node_id in enumerate(ranked):
            if node_id in seen:
                continue
            seen.add(node_id)
            votes[node_id] = votes.get(node_id, 0) + 1
            first_position[node_id] = min(first_position.get(node_id, position), position)

    ordered = sorted(votes, key=lambda node_id: (-votes[node_id], first_position[node_id], node_id))
    entries = [FusedEntry(node_id, votes[node_id], first_position[node_id]) for node_id in ordered[:limit]]
    return FusedRanking(entries=entries, limit=limit, concatenated=concatenated)


PolicyFactory = Callable[[int], Policy]


def agent_seed(base_seed: Optional[int], agent_index: int) -> Optional[int]:
    return None if base_seed is None else base_seed + agent_index


async def run_parallel(
    query: str,
    policy_factory: PolicyFactory,
    n: int,
    toolkit: Toolkit,
    config: PolicyConfig,
    limit: int = DEFAULT_FUSION_LIMIT,
    renderer: Optional[StateRenderer] = None,
    query_id: Optional[str] = None,
    logger=None,
) -> Tuple[FusedRanking, List[Trajectory]]:
    """
    Run n independent agents concurrently and fuse their lists.

    policy_factory(i) builds agent i's policy; remote policies get seed base_seed + i there.
    Failed agents are left out of the fusion; if every agent fails the ranking is empty with
    status "failed". All trajectories are returned.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    logger = get_clean_logger("fusion", logger)
    renderer = renderer or build_renderer(config, logger=logger)

    async def run_one(agent_index: int) -> Trajectory:
        metadata = {"agent_index": agent_index, "seed": agent_seed(config.seed, agent_index)}
        policy = None
        try:
            policy = policy_factory(agent_index)
            _, trajectory = await run_agent(
                query,
                policy,
                toolkit,
                config,
                renderer=renderer,
                query_id=query_id,
                metadata=metadata,
                logger=logger,
            )
        except Exception as e:
            # a crash fails this agent only
            logger.error(f"Agent {agent_index} crashed on query {query_id or query!r}: {type(e).__name__}: {e}")
            return Trajectory(
                query=query,
                termination=Termination.FAILED,
                query_id=query_id,
                failure=f"{type(e).__name__}: {e}",
                metadata=metadata,
            )
        finally:
            if policy is not None:
                await policy.close()
        return trajectory

    trajectories = list(await asyncio.gather(*(run_one(i) for i in range(n))))
    successful = [t for t in trajectories if t.termination != Termination.FAILED]
    ranking = fuse([list(t.final_list) for t in successful], limit=limit)
    ranking.successful_agents = len(successful)
    ranking.total_agents = n
    if not successful:
        ranking.status = "failed"
        logger.warning(f"All {n} agent(s) failed for query {query_id or query!r}")
    elif len(successful) < n:
        logger.warning(f"{n - len(successful)} of {n} agent(s) failed for query {query_id or query!r}")
    return ranking, trajectories
