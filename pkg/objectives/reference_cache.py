"""
Reference-solution cache

Redis when REDIS_URL is configured and reachable, JSON files under
PRECOND_MOMENTUM_CACHE otherwise. Payloads are versioned; a payload with an
unknown format_version or a foreign digest is treated as a miss.
"""

import json
import logging
from pathlib import Path
from typing import Optional

import numpy as np
import redis

from infra.config import cache_dir_from_config, get_app_config

from .base import ReferenceSolution

logger = logging.getLogger(__name__)

CACHE_FORMAT_VERSION = 1
KEY_PREFIX = "reference_v1_"

_redis_client = None
_redis_checked = False


def get_redis_client():
    """Lazily connect to Redis; None when not configured or unreachable"""
    global _redis_client, _redis_checked
    if _redis_checked:
        return _redis_client
    _redis_checked = True

    redis_url = get_app_config()['redis_url']
    if not redis_url:
        logger.debug("REDIS_URL not set, using the on-disk reference cache")
        return None
    try:
        client = redis.from_url(redis_url, decode_responses=True)
        client.ping()
        _redis_client = client
    except Exception as e:
        logger.warning(f"Redis connection failed ({e}), using the on-disk reference cache")
        _redis_client = None
    return _redis_client


def get_cache_key(digest: str) -> str:
    return f"{KEY_PREFIX}{digest}"


def _cache_path(digest: str) -> Path:
    return cache_dir_from_config() / f"{get_cache_key(digest)}.json"


def _encode(digest: str, ref: ReferenceSolution) -> str:
    return json.dumps({
        "format_version": CACHE_FORMAT_VERSION,
        "digest": digest,
        "x_star": [float(v) for v in ref.x_star],
        "f_star": float(ref.f_star),
        "grad_norm_at_solution": float(ref.grad_norm_at_solution),
    })


def _decode(digest: str, payload: str) -> Optional[ReferenceSolution]:
    try:
        data = json.loads(payload)
    except json.JSONDecodeError:
        logger.warning(f"Ignoring unreadable cache entry for {digest}")
        return None
    if data.get("format_version") != CACHE_FORMAT_VERSION or data.get("digest") != digest:
        return None
    return ReferenceSolution(
        x_star=np.asarray(data["x_star"], dtype=np.float64),
        f_star=float(data["f_star"]),
        grad_norm_at_solution=float(data["grad_norm_at_solution"]),
    )


def get_cached_reference(digest: str) -> Optional[ReferenceSolution]:
    """Get a reference solution from cache if it exists"""
    client = get_redis_client()
    try:
        if client is not None:
            payload = client.get(get_cache_key(digest))
        else:
            path = _cache_path(digest)
            payload = path.read_text(encoding="utf-8") if path.is_file() else None
    except Exception as e:
        logger.warning(f"Reference cache read failed for {digest}: {e}")
        return None

    if not payload:
        return None
    ref = _decode(digest, payload)
    if ref is not None:
        logger.debug(f"Reference cache hit for {digest}")
    return ref


def cache_reference(digest: str, ref: ReferenceSolution) -> bool:
    """Store a reference solution; False when the cache is unavailable"""
    payload = _encode(digest, ref)
    client = get_redis_client()
    try:
        if client is not None:
            client.setex(get_cache_key(digest), get_app_config()['reference_cache_ttl_s'], payload)
        else:
            path = _cache_path(digest)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(payload, encoding="utf-8")
        return True
    except Exception as e:
        logger.warning(f"Reference cache write failed for {digest}: {e}")
        return False


def clear_reference_cache() -> int:
    """Delete every cached reference solution; returns the number removed"""
    client = get_redis_client()
    try:
        if client is not None:
            keys = client.keys(f"{KEY_PREFIX}*")
            return client.delete(*keys) if keys else 0
        cache_dir = cache_dir_from_config()
        if not cache_dir.is_dir():
            return 0
        removed = 0
        for path in cache_dir.glob(f"{KEY_PREFIX}*.json"):
            path.unlink()
            removed += 1
        return removed
    except Exception as e:
        logger.warning(f"Clearing the reference cache failed: {e}")
        return 0


def get_cache_stats() -> dict:
    """Get cache statistics (useful for monitoring)"""
    client = get_redis_client()
    try:
        if client is not None:
            info = client.info()
            return {
                "backend": "redis",
                "connected": True,
                "reference_count": len(client.keys(f"{KEY_PREFIX}*")),
                "memory_used": info.get("used_memory_human", "unknown"),
            }
        cache_dir = cache_dir_from_config()
        count = len(list(cache_dir.glob(f"{KEY_PREFIX}*.json"))) if cache_dir.is_dir() else 0
        return {"backend": "disk", "directory": str(cache_dir), "reference_count": count}
    except Exception as e:
        return {"error": str(e)}


def reset_client() -> None:
    """Forget the Redis connection (tests and config reloads)"""
    global _redis_client, _redis_checked
    _redis_client = None
    _redis_checked = False
