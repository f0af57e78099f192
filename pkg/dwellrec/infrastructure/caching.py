"""
Caching Layer for remote news embeddings.

Vectors fetched from the remote embedding service are written through a
cache backend so repeated lookups never hit the network twice.

Supports two backends:
- In-memory (tests, one-off runs)
- Store file (persists vectors in the embedding store text or binary format)
"""

import asyncio
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np

from dwellrec.core.exceptions import MissingNewsError
from dwellrec.core.logging import get_logger
from dwellrec.services.embeddings import EmbeddingStore, load_store, save_store

logger = get_logger(__name__)


@dataclass
class CacheEntry:
    """A cached vector with metadata."""

    value: np.ndarray
    created_at: float = field(default_factory=time.time)
    hit_count: int = 0


class CacheBackend(ABC):
    """Abstract base class for embedding cache backends."""

    def __init__(self) -> None:
        self._hits = 0
        self._misses = 0
        self._lock = asyncio.Lock()

    @abstractmethod
    async def get(self, news_id: str) -> Optional[np.ndarray]:
        """Get a vector from cache."""
        pass

    @abstractmethod
    async def set(self, news_id: str, vector: np.ndarray) -> None:
        """Store a vector."""
        pass

    @abstractmethod
    async def clear(self) -> None:
        """Drop all cached vectors."""
        pass

    @property
    @abstractmethod
    def dim(self) -> Optional[int]:
        """Dimension of the cached vectors, None while empty."""
        pass

    async def flush(self) -> None:
        """Persist pending writes (no-op for volatile backends)."""
        return None

    @property
    def hits(self) -> int:
        return self._hits

    @property
    def misses(self) -> int:
        return self._misses

    def _stats(self, backend: str, size: int) -> Dict[str, Any]:
        total = self._hits + self._misses
        return {
            "backend": backend,
            "size": size,
            "hits": self._hits,
            "misses": self._misses,
            "hit_rate": self._hits / total if total > 0 else 0.0,
        }

    @abstractmethod
    async def get_stats(self) -> Dict[str, Any]:
        """Get cache statistics."""
        pass


class InMemoryCache(CacheBackend):
    """
    Simple in-memory cache implementation.

    Not shared between processes.
    """

    def __init__(self, max_size: int = 100_000) -> None:
        super().__init__()
        self._cache: Dict[str, CacheEntry] = {}
        self._max_size = max_size
        self._dim: Optional[int] = None

    @property
    def dim(self) -> Optional[int]:
        return self._dim

    async def get(self, news_id: str) -> Optional[np.ndarray]:
        async with self._lock:
            entry = self._cache.get(news_id)
            if entry is None:
                self._misses += 1
                return None
            entry.hit_count += 1
            self._hits += 1
            return entry.value

    async def set(self, news_id: str, vector: np.ndarray) -> None:
        async with self._lock:
            if len(self._cache) >= self._max_size and news_id not in self._cache:
                self._evict_oldest()
            self._cache[news_id] = CacheEntry(value=np.asarray(vector, dtype=np.float64))
            if self._dim is None:
                self._dim = int(np.size(vector))

    async def clear(self) -> None:
        async with self._lock:
            self._cache.clear()
            self._hits = 0
            self._misses = 0

    async def get_stats(self) -> Dict[str, Any]:
        async with self._lock:
            stats = self._stats("in_memory", len(self._cache))
            stats["max_size"] = self._max_size
            return stats

    def _evict_oldest(self) -> None:
        if not self._cache:
            return
        oldest = min(self._cache, key=lambda k: self._cache[k].created_at)
        del self._cache[oldest]


class StoreFileCache(CacheBackend):
    """
    Cache persisted in the embedding store file format.

    The file is read on construction (if present) and rewritten by flush().
    """

    def __init__(self, path: Union[str, Path], binary: bool = False) -> None:
        super().__init__()
        self.path = Path(path)
        self.binary = binary
        self._store = load_store(self.path) if self.path.exists() else EmbeddingStore()
        self._dirty = False

    @property
    def dim(self) -> Optional[int]:
        return self._store.dim

    @property
    def store(self) -> EmbeddingStore:
        return self._store

    async def get(self, news_id: str) -> Optional[np.ndarray]:
        async with self._lock:
            try:
                vector = self._store.get(news_id)
            except MissingNewsError:
                self._misses += 1
                return None
            self._hits += 1
            return vector

    async def set(self, news_id: str, vector: np.ndarray) -> None:
        async with self._lock:
            self._store.add(news_id, vector)
            self._dirty = True

    async def flush(self) -> None:
        async with self._lock:
            if self._dirty:
                save_store(self._store, self.path, binary=self.binary)
                self._dirty = False
                logger.debug(f"Flushed {len(self._store)} cached embeddings to {self.path}")

    async def clear(self) -> None:
        async with self._lock:
            self._store = EmbeddingStore()
            self._dirty = True
            self._hits = 0
            self._misses = 0

    async def get_stats(self) -> Dict[str, Any]:
        async with self._lock:
            stats = self._stats("store_file", len(self._store))
            stats["path"] = str(self.path)
            return stats


def configure_cache(backend: str = "memory", **kwargs: Any) -> CacheBackend:
    """
    Build a cache backend.

    Args:
        backend: One of "memory", "store"
        **kwargs: Backend-specific configuration

    Returns:
        Configured cache backend
    """
    if backend == "memory":
        cache: CacheBackend = InMemoryCache(**kwargs)
    elif backend == "store":
        cache = StoreFileCache(**kwargs)
    else:
        raise ValueError(f"Unknown cache backend: {backend}")

    logger.info(f"Configured cache backend: {backend}")
    return cache
