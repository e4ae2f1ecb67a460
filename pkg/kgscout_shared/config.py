import os
import json
from typing import Any, Dict, Optional

from dotenv import load_dotenv

PROJECT_ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), '..'))
DEFAULT_CONFIG_NAME = 'kgscout.config.default.json'
LOCAL_CONFIG_NAME = 'kgscout.config.json'
ENV_PREFIX = 'KGSCOUT_'

_MISSING = object()

config_data = None
config_path = None
overrides: Dict[str, Any] = {}


def resolve_config_path(path: Optional[str] = None) -> str:
    """Pick the config file: explicit path, KGSCOUT_CONFIG, local copy, then the shipped defaults."""
    if path:
        return path
    if os.getenv('KGSCOUT_CONFIG'):
        return os.environ['KGSCOUT_CONFIG']
    local_path = os.path.join(PROJECT_ROOT, LOCAL_CONFIG_NAME)
    if os.path.exists(local_path):
        return local_path
    return os.path.join(PROJECT_ROOT, DEFAULT_CONFIG_NAME)


def reload_config(path: Optional[str] = None):
    global config_data, config_path
    load_dotenv()
    config_path = resolve_config_path(path)
    with open(config_path, 'r', encoding='utf-8') as file:
        config_data = json.load(file)


def set_overrides(values: Dict[str, Any]):
    """Apply command-line flag values; keys are dotted config paths. None values are ignored."""
    for key, value in values.items():
        if value is not None:
            overrides[key] = value


def clear_overrides():
    overrides.clear()


def env_key(key_path: str) -> str:
    return ENV_PREFIX + key_path.replace('.', '__').upper()


def _parse_env_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except ValueError:
        return raw


def get_config(key_path: str = None, default: Any = _MISSING):
    """
    Read a config value by dotted path.

    Precedence is flag override, then environment (KGSCOUT_SECTION__KEY), then the config file,
    then ``default``. Without a default a missing key raises ValueError.
    """
    global config_data
    if config_data is None:
        reload_config()

    if key_path is None:
        return config_data

    if key_path in overrides:
        return overrides[key_path]

    raw = os.getenv(env_key(key_path))
    if raw is not None:
        return _parse_env_value(raw)

    pointer = config_data
    for key in key_path.split('.'):
        if isinstance(pointer, dict) and key in pointer:
            pointer = pointer[key]
        else:
            if default is not _MISSING:
                return default
            raise ValueError(f"Key {key_path} not found in config")

    return pointer
