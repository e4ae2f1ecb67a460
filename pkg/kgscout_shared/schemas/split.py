"""
Schema for one query record of an evaluation or training split
"""

SPLIT_RECORD = {
    "type": "object",
    "properties": {
        "id": {"type": ["string", "integer"]},
        "query": {"type": "string", "minLength": 1},
        "answer_ids": {
            "type": "array",
            "items": {"type": ["string", "integer"]},
            "minItems": 1
        }
    },
    "required": ["id", "query", "answer_ids"]
}
