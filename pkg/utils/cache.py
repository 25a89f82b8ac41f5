"""
Caching for dense operator constructions.

Building codeword bases, projectors and recovery unitaries for the jump code
costs a tensor contraction per gate; the trajectory engine asks for the same
matrices millions of times, so they are memoized here by size and position.
"""

import threading
from collections import OrderedDict
from typing import Any, Callable, Dict, Hashable, Optional


class LRUCache:
    """Thread-safe LRU (Least Recently Used) cache."""

    def __init__(self, max_size: int = 256):
        """
        Initialize LRU cache.

        Args:
            max_size: Maximum number of items in cache
        """
        if max_size < 1:
            raise ValueError("max_size must be >= 1")
        self.max_size = max_size
        self.cache: OrderedDict = OrderedDict()
        self.lock = threading.RLock()
        self.hits = 0
        self.misses = 0
        self.evictions = 0

    def get(self, key: Hashable) -> Optional[Any]:
        with self.lock:
            if key not in self.cache:
                self.misses += 1
                return None
            self.cache.move_to_end(key)
            self.hits += 1
            return self.cache[key]

    def put(self, key: Hashable, value: Any) -> None:
        with self.lock:
            if key in self.cache:
                self.cache.move_to_end(key)
            self.cache[key] = value
            if len(self.cache) > self.max_size:
                self.cache.popitem(last=False)
                self.evictions += 1

    def get_or_create(self, key: Hashable, factory: Callable[[], Any]) -> Any:
        """Return the cached value for key, building it with factory on a miss."""
        with self.lock:
            value = self.get(key)
            if value is None:
                value = factory()
                self.put(key, value)
            return value

    def delete(self, key: Hashable) -> None:
        with self.lock:
            self.cache.pop(key, None)

    def clear(self) -> None:
        """Clear all entries and reset statistics."""
        with self.lock:
            self.cache.clear()
            self.hits = 0
            self.misses = 0
            self.evictions = 0

    def __len__(self) -> int:
        return len(self.cache)

    def get_stats(self) -> Dict[str, Any]:
        with self.lock:
            total = self.hits + self.misses
            return {
                'size': len(self.cache),
                'max_size': self.max_size,
                'hits': self.hits,
                'misses': self.misses,
                'evictions': self.evictions,
                'hit_rate': (self.hits / total * 100) if total else 0.0,
            }


class OperatorCache:
    """Named LRU partitions for code artifacts and pulse operators."""

    def __init__(self, max_size: int = 512):
        self.codes = LRUCache(max_size=64)
        self.pulses = LRUCache(max_size=32)
        self.recoveries = LRUCache(max_size=max_size)

    def code_artifact(self, kind: str, n: int, factory: Callable[[], Any]) -> Any:
        """
        Memoize a per-code matrix such as the codeword basis or projector.

        Args:
            kind: Artifact name
            n: Number of logical qubits
            factory: Builds the artifact on a miss
        """
        return self.codes.get_or_create((kind, n), factory)

    def collective_pulse(self, num_qubits: int, factory: Callable[[], Any]) -> Any:
        return self.pulses.get_or_create(num_qubits, factory)

    def recovery(self, n: int, position: int, frame_flip: bool, factory: Callable[[], Any]) -> Any:
        return self.recoveries.get_or_create((n, position, frame_flip), factory)

    def clear(self) -> None:
        self.codes.clear()
        self.pulses.clear()
        self.recoveries.clear()

    def get_stats(self) -> Dict[str, Dict[str, Any]]:
        return {
            'codes': self.codes.get_stats(),
            'pulses': self.pulses.get_stats(),
            'recoveries': self.recoveries.get_stats(),
        }


_operator_cache = None
_cache_lock = threading.Lock()


def get_operator_cache() -> OperatorCache:
    """Process-global OperatorCache."""
    global _operator_cache

    with _cache_lock:
        if _operator_cache is None:
            _operator_cache = OperatorCache()

    return _operator_cache
