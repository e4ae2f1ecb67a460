from typing import Any, Dict, Optional

import jsonschema
from jsonschema import Draft202012Validator, ValidationError

from .ingestion import NODE_RECORD, EDGE_RECORD, GRAPH_MANIFEST
from .split import SPLIT_RECORD
from .policy_script import POLICY_SCRIPT
from .chat_record import CHAT_RECORD, CHAT_MESSAGE

ALL_SCHEMAS = {
    'NODE_RECORD': NODE_RECORD,
    'EDGE_RECORD': EDGE_RECORD,
    'GRAPH_MANIFEST': GRAPH_MANIFEST,
    'SPLIT_RECORD': SPLIT_RECORD,
    'POLICY_SCRIPT': POLICY_SCRIPT,
    'CHAT_RECORD': CHAT_RECORD,
}

_validators: Dict[str, Draft202012Validator] = {}


def get_validator(schema_id: str) -> Draft202012Validator:
    """Compiled validators are cached; ingestion validates one record per line."""
    if schema_id not in _validators:
        _validators[schema_id] = Draft202012Validator(ALL_SCHEMAS[schema_id])
    return _validators[schema_id]


def describe_validation_error(error: ValidationError) -> str:
    error_path = " -> ".join(str(p) for p in error.absolute_path) if error.absolute_path else "root"
    return f"at '{error_path}': {error.message}"


def first_error(schema_id: str, instance: Any) -> Optional[str]:
    """Validate ``instance``; return a readable description of the first error, or None."""
    error = jsonschema.exceptions.best_match(get_validator(schema_id).iter_errors(instance))
    if error is None:
        return None
    return describe_validation_error(error)


__all__ = [
    'ALL_SCHEMAS',
    'NODE_RECORD',
    'EDGE_RECORD',
    'GRAPH_MANIFEST',
    'SPLIT_RECORD',
    'POLICY_SCRIPT',
    'CHAT_RECORD',
    'CHAT_MESSAGE',
    'get_validator',
    'describe_validation_error',
    'first_error',
]
