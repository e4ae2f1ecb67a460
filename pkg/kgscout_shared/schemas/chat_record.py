"""
Schema for exported chat records (one JSON object per line)
"""

CHAT_MESSAGE = {
    "type": "object",
    "properties": {
        "role": {"enum": ["system", "user", "assistant", "tool"]},
        "content": {"type": "string"},
        "loss_mask": {"enum": ["train", "mask"]},
        "tool_calls": {"type": "array", "items": {"type": "object"}},
        "tool_call_id": {"type": "string"}
    },
    "required": ["role", "content", "loss_mask"],
    "additionalProperties": False,
    "allOf": [
        {
            "if": {"properties": {"role": {"const": "assistant"}}},
            "then": {"properties": {"loss_mask": {"const": "train"}}},
            "else": {"properties": {"loss_mask": {"const": "mask"}}}
        }
    ]
}

CHAT_RECORD = {
    "type": "object",
    "properties": {
        "record_id": {"type": "string", "minLength": 1},
        "query_id": {"type": "string"},
        "repeat": {"type": "integer", "minimum": 0},
        "messages": {"type": "array", "items": CHAT_MESSAGE, "minItems": 1},
        "metadata": {"type": "object"}
    },
    "required": ["record_id", "query_id", "repeat", "messages", "metadata"],
    "additionalProperties": False
}
