"""
Trajectory records for supervised fine-tuning.

Each exported line is one conversation: the rendered agent state of a finished trajectory with a
message-level loss mask, "train" on assistant messages and "mask" everywhere else.
"""

import asyncio
import json
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from kgscout_shared import get_clean_logger, get_config
from kgscout_shared.schemas import first_error
from kgscout_agent import (
    Policy,
    PolicyConfig,
    StateRenderer,
    Toolkit,
    Trajectory,
    UsageTracker,
    agent_seed,
    build_renderer,
    run_agent,
)
from .splits import QueryCase

TRAIN = "train"
MASK = "mask"

RECORDS_FILE = "records.jsonl"
FAILURES_FILE = "failures.jsonl"
MANIFEST_FILE = "manifest.json"


class RecordFormatError(ValueError):
    pass


class ExportError(OSError):
    def __init__(self, path, error: Exception):
        self.path = str(path)
        super().__init__(f"Failed to write {path}: {error}")


@dataclass
class ChatMessage:
    role: str
    content: str
    loss_mask: str
    tool_calls: Optional[List[Dict[str, Any]]] = None
    tool_call_id: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {"role": self.role, "content": self.content, "loss_mask": self.loss_mask}
        if self.tool_calls is not None:
            payload["tool_calls"] = self.tool_calls
        if self.tool_call_id is not None:
            payload["tool_call_id"] = self.tool_call_id
        return payload

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ChatMessage":
        return cls(
            role=payload["role"],
            content=payload["content"],
            loss_mask=payload["loss_mask"],
            tool_calls=payload.get("tool_calls"),
            tool_call_id=payload.get("tool_call_id"),
        )


@dataclass
class ChatRecord:
    record_id: str
    query_id: str
    repeat: int
    messages: List[ChatMessage]
    metadata: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "record_id": self.record_id,
            "query_id": self.query_id,
            "repeat": self.repeat,
            "messages": [message.to_dict() for message in self.messages],
            "metadata": self.metadata,
        }

    def to_line(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_dict(cls, payload: Dict[str, Any]) -> "ChatRecord":
        return cls(
            record_id=payload["record_id"],
            query_id=payload["query_id"],
            repeat=payload["repeat"],
            messages=[ChatMessage.from_dict(message) for message in payload["messages"]],
            metadata=dict(payload.get("metadata", {})),
        )


def _chat_message(message: Dict[str, Any]) -> ChatMessage:
    role = message["role"]
    return ChatMessage(
        role=role,
        content=message.get("content") or "",
        loss_mask=TRAIN if role == "assistant" else MASK,
        tool_calls=message.get("tool_calls") if role == "assistant" else None,
        tool_call_id=message.get("tool_call_id") if role == "tool" else None,
    )


def record(trajectory: Trajectory, renderer: StateRenderer, repeat: int = 0) -> ChatRecord:
    """
    Convert a finished trajectory to its final-state conversation.

    Observation caps are those of the final render, so an early observation may be shorter than
    what the policy saw at that step.
    """
    query_id = trajectory.query_id or ""
    messages = [_chat_message(message) for message in renderer.render(trajectory.query, trajectory.steps)]
    return ChatRecord(
        record_id=f"{query_id}#{repeat}",
        query_id=query_id,
        repeat=repeat,
        messages=messages,
        metadata={
            "termination": trajectory.termination.value,
            "forced_finish": trajectory.forced_finish,
            "steps": len(trajectory.steps),
            "final_list": list(trajectory.final_list.ids),
            **trajectory.metadata,
        },
    )


def parse_records(lines: Iterable[str], source: str = "<records>") -> List[ChatRecord]:
    records = []
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as e:
            raise RecordFormatError(f"{source}:{line_number}: invalid JSON: {e.msg}") from None
        error = first_error("CHAT_RECORD", payload)
        if error:
            raise RecordFormatError(f"{source}:{line_number}: invalid chat record {error}")
        records.append(ChatRecord.from_dict(payload))
    return records


def read_records(path) -> List[ChatRecord]:
    with open(path, "r", encoding="utf-8") as file:
        return parse_records(file, source=str(path))


def export(records: Iterable[ChatRecord], path, manifest: Optional[Dict[str, Any]] = None) -> int:
    """
    Write records as JSONL in the given order; returns the number of lines written.

    With a manifest, manifest.json is written next to the file with the record count filled in.
    """
    path = Path(path)
    count = 0
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as file:
            for chat_record in records:
                file.write(chat_record.to_line())
                count += 1
    except OSError as e:
        raise ExportError(path, e) from e
    if manifest is not None:
        _write_json(path.parent / MANIFEST_FILE, {**manifest, "records": count})
    return count


def _write_json(path: Path, payload: Dict[str, Any]):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as file:
            file.write(json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n")
    except OSError as e:
        raise ExportError(path, e) from e


def _write_lines(path: Path, rows: Iterable[Dict[str, Any]]):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as file:
            for row in rows:
                file.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    except OSError as e:
        raise ExportError(path, e) from e


@dataclass(frozen=True)
class CollectionConfig:
    repeats: int = 3
    temperature: float = 0.7
    max_queries: int = 6000
    max_steps: int = 20
    concurrency: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.max_queries < 1 or self.max_steps < 1 or self.concurrency < 1:
            raise ValueError("max_queries, max_steps and concurrency must be >= 1")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "repeats": self.repeats,
            "temperature": self.temperature,
            "max_queries": self.max_queries,
            "max_steps": self.max_steps,
            "concurrency": self.concurrency,
            "seed": self.seed,
        }

    @classmethod
    def from_config(cls) -> "CollectionConfig":
        return cls(
            repeats=int(get_config("collection.repeats")),
            temperature=float(get_config("collection.temperature")),
            max_queries=int(get_config("collection.max_queries")),
            max_steps=int(get_config("collection.max_steps")),
            concurrency=int(get_config("collection.concurrency")),
            seed=int(get_config("collection.seed")),
        )


def subsample(cases: Sequence[QueryCase], max_queries: int, seed: int) -> List[QueryCase]:
    """At most max_queries cases, drawn with a seeded RNG, in their original order."""
    if len(cases) <= max_queries:
        return list(cases)
    chosen = set(random.Random(seed).sample(range(len(cases)), max_queries))
    return [case for i, case in enumerate(cases) if i in chosen]


def _load_existing(path: Path, logger) -> List[ChatRecord]:
    """Records of an interrupted run; a torn last line is dropped."""
    if not path.exists():
        return []
    with open(path, "r", encoding="utf-8") as file:
        lines = [line for line in file if line.strip()]
    try:
        return parse_records(lines, source=str(path))
    except RecordFormatError:
        if not lines:
            raise
        logger.warning(f"Dropping unreadable last line of {path}")
        return parse_records(lines[:-1], source=str(path))


def _message_totals(records: Sequence[ChatRecord]) -> Tuple[Dict[str, int], Dict[str, int]]:
    messages: Dict[str, int] = {}
    characters: Dict[str, int] = {}
    for chat_record in records:
        for message in chat_record.messages:
            messages[message.role] = messages.get(message.role, 0) + 1
            characters[message.role] = characters.get(message.role, 0) + len(message.content)
    return messages, characters


async def collect(
    cases: Sequence[QueryCase],
    policy_factory: Callable[[int], Policy],
    toolkit: Toolkit,
    policy_config: PolicyConfig,
    collection_config: CollectionConfig,
    output_dir,
    renderer: Optional[StateRenderer] = None,
    usage_tracker: Optional[UsageTracker] = None,
    logger=None,
) -> Dict[str, Any]:
    """
    Run every (query, repeat) pair and export the finished trajectories.

    policy_factory(repeat) builds the policy for one repeat. Records are appended to
    records.jsonl as they complete and the file is rewritten in (query id, repeat) order at the
    end. Failed trajectories go to failures.jsonl. Pairs already in records.jsonl are skipped, so
    an interrupted collection resumes where it stopped. Returns the manifest.
    """
    logger = get_clean_logger("trajectory_log", logger)
    policy_config = replace(
        policy_config,
        temperature=collection_config.temperature,
        max_steps=collection_config.max_steps,
    )
    renderer = renderer or build_renderer(policy_config, logger=logger)
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    records_path = output_dir / RECORDS_FILE

    selected = subsample(cases, collection_config.max_queries, collection_config.seed)
    existing = _load_existing(records_path, logger)
    if records_path.exists():
        # drop any torn tail before appending
        export(existing, records_path)
    done: Set[Tuple[str, int]] = {(r.query_id, r.repeat) for r in existing}
    pending = [
        (case, repeat)
        for case in selected
        for repeat in range(collection_config.repeats)
        if (case.id, repeat) not in done
    ]
    logger.info(
        f"Collecting {len(pending)} trajectories for {len(selected)} queries "
        f"({len(done)} already exported)"
    )

    new_records: List[ChatRecord] = []
    failures: List[Dict[str, Any]] = []
    semaphore = asyncio.Semaphore(collection_config.concurrency)

    with open(records_path, "a", encoding="utf-8", newline="\n") as sink:

        async def collect_one(case: QueryCase, repeat: int):
            async with semaphore:
                policy = policy_factory(repeat)
                try:
                    _, trajectory = await run_agent(
                        case.query,
                        policy,
                        toolkit,
                        policy_config,
                        renderer=renderer,
                        query_id=case.id,
                        metadata={"repeat": repeat, "seed": agent_seed(policy_config.seed, repeat)},
                        logger=logger,
                    )
                except Exception as e:
                    trajectory = None
                    reason = f"{type(e).__name__}: {e}"
                finally:
                    await policy.close()
            if trajectory is not None and not trajectory.failed:
                chat_record = record(trajectory, renderer, repeat)
                sink.write(chat_record.to_line())
                sink.flush()
                new_records.append(chat_record)
                return
            if trajectory is not None:
                reason = trajectory.failure or "failed"
            logger.warning(f"Trajectory for query {case.id} repeat {repeat} failed: {reason}")
            failures.append({"query_id": case.id, "repeat": repeat, "reason": reason})

        await asyncio.gather(*(collect_one(case, repeat) for case, repeat in pending))

    all_records = sorted(existing + new_records, key=lambda r: (r.query_id, r.repeat))
    count = export(all_records, records_path)
    _write_lines(output_dir / FAILURES_FILE, sorted(failures, key=lambda f: (f["query_id"], f["repeat"])))

    messages, characters = _message_totals(all_records)
    prompt = renderer.prompt
    manifest = {
        "collection": collection_config.to_dict(),
        "policy": {
            "kind": policy_config.kind,
            "model": policy_config.model,
            "temperature": policy_config.temperature,
            "max_steps": policy_config.max_steps,
            "answer_mode": policy_config.answer_mode,
        },
        "prompt": {"version": prompt.version, "sha256": prompt.sha256},
        "counts": {
            "queries": len(selected),
            "expected": len(selected) * collection_config.repeats,
            "records": count,
            "failures": len(failures),
        },
        "messages": messages,
        "characters": characters,
        "usage": usage_tracker.summary() if usage_tracker is not None else None,
    }
    _write_json(output_dir / MANIFEST_FILE, manifest)
    logger.info(f"Exported {count} records ({len(failures)} failures) to {output_dir}")
    return manifest
