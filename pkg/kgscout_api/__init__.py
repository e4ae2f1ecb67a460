from .run_config import RunConfig, resolve_path
from .service import create_app, get_port_check_instructions, is_port_free

__all__ = [
    'RunConfig',
    'resolve_path',
    'create_app',
    'get_port_check_instructions',
    'is_port_free',
]
