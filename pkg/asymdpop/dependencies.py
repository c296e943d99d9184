import redis
import hashlib
import json
import logging
from typing import Optional, Any
import os
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

# Redis configuration
REDIS_URL = os.getenv("REDIS_URL", "redis://localhost:6379")
CACHE_TTL = int(os.getenv("CACHE_TTL", "300"))  # 5 minutes default


def solve_key(document: dict, config: dict) -> str:
    """Cache key of a solve request: hash of the canonical problem and configuration."""
    canonical = json.dumps({"problem": document, "config": config}, sort_keys=True, separators=(",", ":"))
    return "solve:" + hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class CacheService:
    def __init__(self, url: str = REDIS_URL):
        self.url = url
        self.redis_client = None
        self._connect_redis()

    def _connect_redis(self):
        """Attempt to connect to Redis, solve uncached if unavailable"""
        try:
            self.redis_client = redis.from_url(self.url, decode_responses=True)
            self.redis_client.ping()
            logger.info("Successfully connected to Redis")
        except Exception as e:
            logger.warning(f"Redis connection failed: {e}. Solving without a result cache.")
            self.redis_client = None

    def get(self, key: str) -> Optional[Any]:
        if not self.redis_client:
            return None

        try:
            value = self.redis_client.get(key)
            return json.loads(value) if value else None
        except Exception as e:
            logger.error(f"Cache get error: {e}")
            return None

    def set(self, key: str, value: Any, ttl: Optional[int] = None) -> bool:
        if not self.redis_client:
            return False

        try:
            ttl_value = ttl if ttl is not None else CACHE_TTL
            self.redis_client.setex(key, ttl_value, json.dumps(value))
            return True
        except Exception as e:
            logger.error(f"Cache set error: {e}")
            return False


_cache_service: Optional[CacheService] = None


def get_cache() -> CacheService:
    """Dependency to get the shared cache service, connecting on first use"""
    global _cache_service
    if _cache_service is None:
        _cache_service = CacheService()
    return _cache_service
