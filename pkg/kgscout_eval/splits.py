"""
Query split files.

Accepted formats, chosen by file extension:
  .jsonl        one {"id", "query", "answer_ids": [...]} object per line
  .csv / .tsv   header with id, query and answer_ids; answer_ids holds a JSON list ("[12, 40]")
Integer ids are normalised to text.
"""

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

from kgscout_shared import get_clean_logger
from kgscout_shared.schemas import first_error
from kgscout_graph import Graph

CSV_COLUMNS = ("id", "query", "answer_ids")


class SplitError(ValueError):
    pass


@dataclass(frozen=True)
class QueryCase:
    id: str
    query: str
    answer_ids: Tuple[str, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"id": self.id, "query": self.query, "answer_ids": list(self.answer_ids)}


def _case_from_record(record: Mapping[str, Any], where: str) -> QueryCase:
    error = first_error("SPLIT_RECORD", record)
    if error:
        raise SplitError(f"{where}: invalid split record {error}: {json.dumps(record, ensure_ascii=False)}")
    answer_ids = tuple(dict.fromkeys(str(answer_id) for answer_id in record["answer_ids"]))
    return QueryCase(id=str(record["id"]), query=record["query"], answer_ids=answer_ids)


def _read_jsonl(path: Path) -> Iterable[Tuple[str, Dict[str, Any]]]:
    with open(path, "r", encoding="utf-8") as file:
        for line_number, line in enumerate(file, start=1):
            if not line.strip():
                continue
            try:
                yield f"{path}:{line_number}", json.loads(line)
            except json.JSONDecodeError as e:
                raise SplitError(f"{path}:{line_number}: invalid JSON: {e.msg}") from None


def _read_delimited(path: Path, delimiter: str) -> Iterable[Tuple[str, Dict[str, Any]]]:
    with open(path, "r", encoding="utf-8", newline="") as file:
        reader = csv.DictReader(file, delimiter=delimiter)
        missing = [column for column in CSV_COLUMNS if column not in (reader.fieldnames or [])]
        if missing:
            raise SplitError(f"{path}: missing column(s) {missing}, expected {list(CSV_COLUMNS)}")
        for row in reader:
            where = f"{path}:{reader.line_num}"
            try:
                answer_ids = json.loads(row["answer_ids"])
            except (json.JSONDecodeError, TypeError):
                raise SplitError(f"{where}: answer_ids must be a JSON list, got {row['answer_ids']!r}") from None
            yield where, {"id": row["id"], "query": row["query"], "answer_ids": answer_ids}


def load_split(path, graph: Optional[Graph] = None, logger=None) -> List[QueryCase]:
    """
    Load and validate a split.

    Raises:
        SplitError: empty split, malformed record, duplicate query id, or (with graph) an answer id
            that does not resolve
    """
    logger = get_clean_logger("splits", logger)
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".jsonl", ".json"):
        records = _read_jsonl(path)
    elif suffix == ".csv":
        records = _read_delimited(path, ",")
    elif suffix == ".tsv":
        records = _read_delimited(path, "\t")
    else:
        raise SplitError(f"{path}: unsupported split format '{suffix}', use .jsonl, .csv or .tsv")

    cases: List[QueryCase] = []
    seen = set()
    for where, record in records:
        case = _case_from_record(record, where)
        if case.id in seen:
            raise SplitError(f"{where}: duplicate query id '{case.id}'")
        seen.add(case.id)
        if graph is not None:
            unknown = [answer_id for answer_id in case.answer_ids if not graph.has_node(answer_id)]
            if unknown:
                raise SplitError(f"{where}: answer id(s) {unknown} of query '{case.id}' are not in the graph")
        cases.append(case)

    if not cases:
        raise SplitError(f"{path}: split is empty")
    logger.info(f"Loaded {len(cases)} queries from {path}")
    return cases
