"""
Schema for scripted policy files
"""

SCRIPT_ACTION = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "tool": {"type": "string", "minLength": 1},
                "arguments": {"type": "object"}
            },
            "required": ["tool"],
            "additionalProperties": False
        },
        {
            "type": "object",
            "properties": {
                "select": {"type": "array", "items": {"type": "string"}, "minItems": 1}
            },
            "required": ["select"],
            "additionalProperties": False
        },
        {
            "type": "object",
            "properties": {
                "select_top": {"type": "integer", "minimum": 1}
            },
            "required": ["select_top"],
            "additionalProperties": False
        },
        {
            "type": "object",
            "properties": {
                "finish": {"const": True}
            },
            "required": ["finish"],
            "additionalProperties": False
        }
    ]
}

POLICY_SCRIPT = {
    "type": "object",
    "properties": {
        "steps": {
            "oneOf": [
                {
                    "type": "object",
                    "patternProperties": {
                        "^[1-9][0-9]*$": {"type": "array", "items": SCRIPT_ACTION}
                    },
                    "additionalProperties": False
                },
                {
                    "type": "array",
                    "items": {"type": "array", "items": SCRIPT_ACTION}
                }
            ]
        },
        "rules": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "match": {
                        "type": "object",
                        "properties": {
                            "tool": {"type": "string"},
                            "status": {"enum": ["ok", "error"]}
                        },
                        "additionalProperties": False
                    },
                    "actions": {"type": "array", "items": SCRIPT_ACTION, "minItems": 1}
                },
                "required": ["actions"],
                "additionalProperties": False
            }
        }
    },
    "additionalProperties": False
}
