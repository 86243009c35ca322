"""
Infrastructure module for the preconditioned momentum benchmark

Provides configuration management, the exception hierarchy and logging setup.
"""

from .config import get_app_config, load_run_config_file, validate_config
from .logging_setup import configure_logging

__all__ = [
    'configure_logging',
    'get_app_config',
    'load_run_config_file',
    'validate_config',
]
