from .logging_utils import get_clean_logger, setup_logging
from .config import get_config, reload_config, set_overrides, clear_overrides

__all__ = [
  'get_clean_logger',
  'setup_logging',
  'get_config',
  'reload_config',
  'set_overrides',
  'clear_overrides',
]
