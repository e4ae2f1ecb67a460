"""
Retrieval metrics (Hit@1, Hit@5, Recall@20, MRR) over query splits, and behavioural statistics
over trajectories.
"""

import asyncio
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Any, Awaitable, Callable, Collection, Dict, Iterable, List, Optional, Sequence

from kgscout_shared import get_clean_logger
from kgscout_agent import GLOBAL_SEARCH, NEIGHBORS, Trajectory
from .splits import QueryCase

METRIC_DEPTH = 20


@dataclass(frozen=True)
class QueryMetrics:
    hit1: float = 0.0
    hit5: float = 0.0
    recall20: float = 0.0
    rr: float = 0.0


def metrics_for(ranking: Sequence[str], gt: Collection[str]) -> QueryMetrics:
    """Per-query metrics on the first 20 entries of a deduplicated ranking."""
    if not gt:
        raise ValueError("ground truth must be non-empty")
    gt = set(gt)
    top = list(ranking)[:METRIC_DEPTH]
    first_hit = next((position for position, node_id in enumerate(top, start=1) if node_id in gt), None)
    return QueryMetrics(
        hit1=1.0 if first_hit == 1 else 0.0,
        hit5=1.0 if first_hit is not None and first_hit <= 5 else 0.0,
        recall20=len(gt.intersection(top)) / len(gt),
        rr=1.0 / first_hit if first_hit is not None else 0.0,
    )


@dataclass
class QueryOutcome:
    query_id: str
    query: str
    answer_ids: List[str]
    ranking: List[str]
    metrics: QueryMetrics
    failed: bool = False
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "query_id": self.query_id,
            "query": self.query,
            "answer_ids": self.answer_ids,
            "ranking": self.ranking,
            **asdict(self.metrics),
            "failed": self.failed,
            "error": self.error,
        }


@dataclass
class MetricReport:
    hit1: float
    hit5: float
    recall20: float
    mrr: float
    query_count: int
    failed_count: int = 0
    per_query: List[QueryOutcome] = field(default_factory=list)

    @classmethod
    def from_outcomes(cls, outcomes: Sequence[QueryOutcome]) -> "MetricReport":
        count = len(outcomes)

        def mean(values: Iterable[float]) -> float:
            return sum(values) / count if count else 0.0

        return cls(
            hit1=mean(o.metrics.hit1 for o in outcomes),
            hit5=mean(o.metrics.hit5 for o in outcomes),
            recall20=mean(o.metrics.recall20 for o in outcomes),
            mrr=mean(o.metrics.rr for o in outcomes),
            query_count=count,
            failed_count=sum(1 for o in outcomes if o.failed),
            per_query=list(outcomes),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "hit1": self.hit1,
            "hit5": self.hit5,
            "recall20": self.recall20,
            "mrr": self.mrr,
            "query_count": self.query_count,
            "failed_count": self.failed_count,
        }

    def to_table(self) -> str:
        rows = [
            ("Hit@1", self.hit1),
            ("Hit@5", self.hit5),
            ("Recall@20", self.recall20),
            ("MRR", self.mrr),
        ]
        lines = [f"{'metric':<10} {'value':>8}"]
        lines += [f"{name:<10} {value * 100:>7.2f}%" for name, value in rows]
        lines.append(f"{self.query_count} queries, {self.failed_count} failed")
        return "\n".join(lines)


RetrievalFunction = Callable[[QueryCase], Awaitable[Sequence[str]]]


async def evaluate_split(
    cases: Sequence[QueryCase],
    retrieve: RetrievalFunction,
    concurrency: int = 4,
    logger=None,
) -> MetricReport:
    """
    Run retrieve() on every case, at most `concurrency` at a time, and average the metrics.
    A query whose retrieval raises scores zero and is flagged as failed.
    """
    logger = get_clean_logger("evaluation", logger)
    semaphore = asyncio.Semaphore(max(1, concurrency))

    async def evaluate_one(case: QueryCase) -> QueryOutcome:
        async with semaphore:
            try:
                ranking = list(await retrieve(case))
            except Exception as e:
                logger.warning(f"Retrieval failed for query {case.id}: {e}")
                return QueryOutcome(case.id, case.query, list(case.answer_ids), [], QueryMetrics(), failed=True, error=str(e))
        ranking = ranking[:METRIC_DEPTH]
        return QueryOutcome(case.id, case.query, list(case.answer_ids), ranking, metrics_for(ranking, case.answer_ids))

    outcomes = await asyncio.gather(*(evaluate_one(case) for case in cases))
    report = MetricReport.from_outcomes(outcomes)
    logger.info(
        f"Evaluated {report.query_count} queries: Hit@1={report.hit1:.4f} Hit@5={report.hit5:.4f} "
        f"R@20={report.recall20:.4f} MRR={report.mrr:.4f} ({report.failed_count} failed)"
    )
    return report


@dataclass(frozen=True)
class ToolUsageStats:
    global_search_calls: int
    neighbors_calls: int
    graph: str = ""

    @property
    def total_calls(self) -> int:
        return self.global_search_calls + self.neighbors_calls

    @property
    def global_search_share(self) -> Optional[float]:
        return self.global_search_calls / self.total_calls if self.total_calls else None

    @property
    def neighbors_share(self) -> Optional[float]:
        return self.neighbors_calls / self.total_calls if self.total_calls else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "graph": self.graph,
            "global_search_calls": self.global_search_calls,
            "neighbors_calls": self.neighbors_calls,
            "global_search_share": self.global_search_share,
            "neighbors_share": self.neighbors_share,
        }


def tool_usage_stats(trajectories: Iterable[Trajectory], graph: str = "") -> ToolUsageStats:
    """Shares of global search and neighborhood calls; shares are None when no call was made."""
    counts = {GLOBAL_SEARCH: 0, NEIGHBORS: 0}
    for trajectory in trajectories:
        for call in trajectory.tool_calls():
            if call.tool in counts:
                counts[call.tool] += 1
    return ToolUsageStats(counts[GLOBAL_SEARCH], counts[NEIGHBORS], graph)


@dataclass
class NeighborsHistogram:
    success: Dict[int, int] = field(default_factory=dict)
    failure: Dict[int, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "success": {str(calls): count for calls, count in sorted(self.success.items())},
            "failure": {str(calls): count for calls, count in sorted(self.failure.items())},
        }


def neighbors_calls(trajectory: Trajectory) -> int:
    return sum(1 for call in trajectory.tool_calls() if call.tool == NEIGHBORS)


def trajectory_hit1(trajectory: Trajectory, answer_ids: Collection[str]) -> bool:
    """A trajectory succeeds when the first node of its own list is a ground-truth answer."""
    return bool(trajectory.final_list.ids) and trajectory.final_list.ids[0] in set(answer_ids)


def neighbors_call_histogram(trajectories: Sequence[Trajectory], outcomes: Sequence[bool]) -> NeighborsHistogram:
    """Distribution of neighborhood-call counts per trajectory, split by success."""
    if len(trajectories) != len(outcomes):
        raise ValueError(f"{len(trajectories)} trajectories but {len(outcomes)} outcomes")
    histogram = NeighborsHistogram()
    for trajectory, success in zip(trajectories, outcomes):
        bucket = histogram.success if success else histogram.failure
        calls = neighbors_calls(trajectory)
        bucket[calls] = bucket.get(calls, 0) + 1
    return histogram


def save_report(
    report: MetricReport,
    output_dir,
    tool_usage: Optional[ToolUsageStats] = None,
    histogram: Optional[NeighborsHistogram] = None,
    logger=None,
) -> Path:
    """Write report.json, report.txt and per_query.jsonl (plus behaviour stats when given)."""
    logger = get_clean_logger("evaluation", logger)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    payload: Dict[str, Any] = {"metrics": report.to_dict()}
    if tool_usage is not None:
        payload["tool_usage"] = tool_usage.to_dict()
    if histogram is not None:
        payload["neighbors_call_histogram"] = histogram.to_dict()
    with open(output_dir / "report.json", "w", encoding="utf-8") as file:
        file.write(json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n")
    with open(output_dir / "report.txt", "w", encoding="utf-8") as file:
        file.write(report.to_table() + "\n")
    with open(output_dir / "per_query.jsonl", "w", encoding="utf-8") as file:
        for outcome in report.per_query:
            file.write(json.dumps(outcome.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")
    logger.info(f"Wrote evaluation report to {output_dir}")
    return output_dir
