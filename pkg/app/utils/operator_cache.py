"""
In-memory LRU cache for Weyl operator matrices
Bounded, thread-safe, with hit/miss statistics
"""

import threading
from collections import OrderedDict
from typing import Any, Dict, Hashable, Optional

import numpy as np
from loguru import logger


class OperatorCache:
    """LRU cache mapping grid indices to read-only matrices"""

    def __init__(self, capacity: int = 4096, name: str = "weyl"):
        """
        Initialize the cache

        Args:
            capacity: maximum number of stored matrices
            name: identifier used in log messages
        """
        if capacity < 1:
            raise ValueError(f"Cache capacity must be positive, got {capacity}")
        self.capacity = capacity
        self.name = name
        self._store: "OrderedDict[Hashable, np.ndarray]" = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0
        self.evictions = 0

    def get(self, key: Hashable) -> Optional[np.ndarray]:
        """
        Retrieve a cached matrix

        Returns:
            The matrix if present, None otherwise
        """
        with self._lock:
            value = self._store.get(key)
            if value is None:
                self.misses += 1
                return None
            self._store.move_to_end(key)
            self.hits += 1
            return value

    def set(self, key: Hashable, value: np.ndarray) -> None:
        """Store a matrix, evicting the least recently used entry when full"""
        frozen = np.array(value, copy=True)
        frozen.setflags(write=False)
        with self._lock:
            if key in self._store:
                self._store.move_to_end(key)
                self._store[key] = frozen
                return
            self._store[key] = frozen
            if len(self._store) > self.capacity:
                self._store.popitem(last=False)
                self.evictions += 1

    def clear(self) -> None:
        with self._lock:
            self._store.clear()
        logger.debug(f"🔄 {self.name} cache cleared")

    def __len__(self) -> int:
        with self._lock:
            return len(self._store)

    def get_stats(self) -> Dict[str, Any]:
        """Get cache statistics"""
        with self._lock:
            total = self.hits + self.misses
            return {
                "name": self.name,
                "size": len(self._store),
                "capacity": self.capacity,
                "hits": self.hits,
                "misses": self.misses,
                "evictions": self.evictions,
                "hit_rate": round(self.hits / total, 4) if total else 0.0,
            }
