"""
Schemas for the graph ingestion format (node lines, edge lines and the type manifest)
"""

NODE_RECORD = {
    "type": "object",
    "properties": {
        "id": {
            "type": "string",
            "minLength": 1,
            "description": "Node identifier, unique within the graph"
        },
        "type": {
            "type": "string",
            "minLength": 1,
            "description": "Entity type label, declared in the manifest"
        },
        "fields": {
            "type": "array",
            "items": {
                "type": "array",
                "prefixItems": [{"type": "string"}, {"type": "string"}],
                "minItems": 2,
                "maxItems": 2
            },
            "description": "Ordered descriptor fields as [name, value] pairs"
        }
    },
    "required": ["id", "type", "fields"],
    "additionalProperties": False
}

EDGE_RECORD = {
    "type": "object",
    "properties": {
        "src": {"type": "string", "minLength": 1},
        "dst": {"type": "string", "minLength": 1},
        "type": {
            "type": "string",
            "minLength": 1,
            "description": "Relation type label, declared in the manifest"
        }
    },
    "required": ["src", "dst", "type"],
    "additionalProperties": False
}

GRAPH_MANIFEST = {
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "entity_types": {
            "type": "array",
            "items": {"type": "string", "minLength": 1},
            "uniqueItems": True
        },
        "relation_types": {
            "type": "array",
            "items": {"type": "string", "minLength": 1},
            "uniqueItems": True
        }
    },
    "required": ["entity_types", "relation_types"]
}
