"""
Configuration management for the preconditioned momentum benchmark

Environment-driven configuration (with an optional local .env file) plus the
key=value run-configuration files accepted by the CLI.
"""

import os
import logging
from pathlib import Path
from typing import Dict, Any, Optional

from dotenv import load_dotenv, dotenv_values

load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_CACHE_DIR = "./.reference_cache"
DEFAULT_TELEMETRY_DIR = "./.telemetry"
REFERENCE_CACHE_TTL_S = 7 * 24 * 3600  # 1 week


def get_app_config() -> Dict[str, Any]:
    """Get application configuration with all required values"""

    app_config = {
        'app_env': os.getenv('APP_ENV', 'dev'),
        'app_version': os.getenv('APP_VERSION', '0.1.0'),
        'log_level': os.getenv('LOG_LEVEL', 'WARNING').upper(),

        # Reference-solution cache
        'cache_dir': os.getenv('PRECOND_MOMENTUM_CACHE', DEFAULT_CACHE_DIR),
        'redis_url': os.getenv('REDIS_URL'),
        'reference_cache_ttl_s': int(os.getenv('REFERENCE_CACHE_TTL', str(REFERENCE_CACHE_TTL_S))),

        # Parallel member runs (compare / tune)
        'max_workers': int(os.getenv('MAX_WORKERS', '4')),

        # Telemetry configuration
        'telemetry_enabled': os.getenv('TELEMETRY_ENABLED', 'false').lower() == 'true',
        'telemetry_dir': os.getenv('TELEMETRY_DIR', DEFAULT_TELEMETRY_DIR),
    }

    return app_config


def validate_config() -> bool:
    """Validate that the configuration is usable; problems are logged, not raised"""
    config = get_app_config()
    ok = True

    cache_dir = Path(config['cache_dir'])
    if cache_dir.exists() and not os.access(cache_dir, os.W_OK):
        logger.warning(f"Reference cache directory is not writable: {cache_dir}")
        ok = False

    if config['max_workers'] < 1:
        logger.error(f"MAX_WORKERS must be positive, got {config['max_workers']}")
        ok = False

    if config['log_level'] not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
        logger.warning(f"Unknown LOG_LEVEL {config['log_level']!r}, falling back to WARNING")
        ok = False

    if ok:
        logger.info("Configuration validation passed")
    return ok


def load_run_config_file(path: str) -> Dict[str, str]:
    """
    Read a key=value run-configuration file

    Keys are normalized to the CLI's long-flag spelling with underscores
    ("floor-e" and "floor_e" both become "floor_e"). Empty values are dropped.

    Args:
        path: Path to the configuration file

    Returns:
        dict: Normalized key -> raw string value
    """
    if not Path(path).is_file():
        raise FileNotFoundError(f"Run configuration file not found: {path}")

    raw = dotenv_values(path)
    normalized: Dict[str, str] = {}
    for key, value in raw.items():
        if value is None or value == "":
            continue
        normalized[key.strip().lstrip('-').replace('-', '_').lower()] = value.strip()

    logger.debug(f"Loaded {len(normalized)} keys from {path}")
    return normalized


def cache_dir_from_config(config: Optional[Dict[str, Any]] = None) -> Path:
    """Resolve the reference-cache directory"""
    config = config or get_app_config()
    return Path(config['cache_dir']).expanduser()
