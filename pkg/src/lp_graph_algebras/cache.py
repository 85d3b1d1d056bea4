"""Memoization layer shared by the algebra engine and the MCP server."""

import hashlib
import json
import threading
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Hashable, Optional, TypeVar, Union

import structlog
from cachetools import LRUCache
from pydantic import BaseModel

from lp_graph_algebras.config import CacheConfig

logger = structlog.get_logger(__name__)

T = TypeVar("T")


@dataclass
class CacheStats:
    """Lookup counters; errors counts computations that raised on a miss."""

    hits: int = 0
    misses: int = 0
    evictions: int = 0
    errors: int = 0

    @property
    def total_requests(self) -> int:
        return self.hits + self.misses

    @property
    def hit_rate(self) -> float:
        return self.hits / self.total_requests if self.total_requests else 0.0

    def reset(self) -> None:
        self.hits = self.misses = self.evictions = self.errors = 0

    def to_dict(self) -> Dict[str, Any]:
        return {**asdict(self), "total_requests": self.total_requests, "hit_rate": self.hit_rate}


_MISSING = object()


class Cache:
    """Thread-safe LRU cache with hit/miss accounting."""

    def __init__(self, config: CacheConfig, name: str = "default") -> None:
        """Initialize cache with configuration.

        Args:
            config: Cache configuration
            name: Label used in log events
        """
        self.config = config
        self.enabled = config.enabled
        self.name = name
        self.stats = CacheStats()
        self.logger = logger.bind(component="cache", cache=name)
        self._store: LRUCache = LRUCache(maxsize=max(1, config.max_size))
        self._lock = threading.Lock()

    @staticmethod
    def _generate_key(prefix: str, params: Union[Dict[str, Any], BaseModel]) -> str:
        """Generate a cache key from parameters.

        Args:
            prefix: Key prefix (e.g., "norm", "experiment")
            params: Parameters to include in key

        Returns:
            Cache key string
        """
        if isinstance(params, BaseModel):
            params_dict = params.model_dump(mode="json")
        else:
            params_dict = params

        sorted_params = json.dumps(params_dict, sort_keys=True, default=str)
        param_hash = hashlib.md5(sorted_params.encode()).hexdigest()

        return f"{prefix}:{param_hash}"

    def get(self, key: Hashable) -> Optional[Any]:
        """Get value from cache, or None when absent."""
        value = self._lookup(key)
        return None if value is _MISSING else value

    def _lookup(self, key: Hashable) -> Any:
        if not self.enabled:
            return _MISSING
        with self._lock:
            if key in self._store:
                self.stats.hits += 1
                return self._store[key]
            self.stats.misses += 1
            return _MISSING

    def set(self, key: Hashable, value: Any) -> None:
        """Set value in cache."""
        if not self.enabled:
            return
        with self._lock:
            if key not in self._store and len(self._store) >= self._store.maxsize:
                self.stats.evictions += 1
            self._store[key] = value

    def get_or_compute(self, key: Hashable, compute: Callable[[], T]) -> T:
        """Return the cached value for key, computing and storing it on a miss."""
        value = self._lookup(key)
        if value is not _MISSING:
            return value  # type: ignore[no-any-return]
        try:
            result = compute()
        except Exception:
            with self._lock:
                self.stats.errors += 1
            self.logger.debug("Memoized computation failed", key=repr(key))
            raise
        self.set(key, result)
        return result

    def delete(self, key: Hashable) -> bool:
        """Delete a key; returns whether it was present."""
        with self._lock:
            if key in self._store:
                del self._store[key]
                return True
            return False

    def clear(self) -> None:
        """Drop every entry."""
        with self._lock:
            self._store.clear()
        self.logger.debug("Cache cleared")

    def __len__(self) -> int:
        return len(self._store)

    def get_stats(self) -> Dict[str, Any]:
        """Get cache statistics."""
        return {
            "name": self.name,
            "enabled": self.enabled,
            "stats": self.stats.to_dict(),
            "size": len(self._store),
            "max_size": self._store.maxsize,
        }


# Global cache instance
_cache: Optional[Cache] = None


def get_cache() -> Optional[Cache]:
    """Get the global cache instance."""
    return _cache


def set_cache(cache: Optional[Cache]) -> None:
    """Set the global cache instance."""
    global _cache
    _cache = cache


def init_cache(config: CacheConfig) -> Cache:
    """Initialize the global cache."""
    cache = Cache(config, name="global")
    set_cache(cache)
    return cache
