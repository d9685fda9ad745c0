"""Surrogate cache state with LRU and LFU replacement."""

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .errors import SimulationInvariantError
from .logging import get_logger
from .scenario import CachePolicy

logger = get_logger(__name__)


@dataclass
class CacheEntry:
    size_bits: float
    admitted_s: float
    last_touch_s: float
    touches: int = 1


class NodeCache:
    """
    Cache of one CDN node.

    Victims are chosen by the node's policy: LRU evicts the least recently
    touched entry, LFU the least frequently touched one. Ties go to the earlier
    admission time, then to the lexicographically smaller content id, so the
    order is total.
    """

    def __init__(
        self, node_id: str, capacity_bits: float, policy: CachePolicy = CachePolicy.LRU
    ) -> None:
        self.node_id = node_id
        self.capacity_bits = capacity_bits
        self.policy = policy
        self.used_bits = 0.0
        self._entries: Dict[str, CacheEntry] = {}

    def __contains__(self, content_id: object) -> bool:
        return content_id in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def free_bits(self) -> float:
        return self.capacity_bits - self.used_bits

    def resident(self) -> List[str]:
        return sorted(self._entries)

    def entry(self, content_id: str) -> CacheEntry:
        return self._entries[content_id]

    def _victim_key(self, content_id: str) -> Tuple[float, float, str]:
        entry = self._entries[content_id]
        if self.policy is CachePolicy.LFU:
            return (entry.touches, entry.admitted_s, content_id)
        return (entry.last_touch_s, entry.admitted_s, content_id)

    def touch(self, content_id: str, t: float) -> List[str]:
        """Record a hit on a resident content. Never evicts."""
        entry = self._entries.get(content_id)
        if entry is not None:
            entry.touches += 1
            entry.last_touch_s = t
        return []

    def admit(self, content_id: str, size_bits: float, t: float) -> List[str]:
        """
        Insert a content, evicting as needed.

        A content larger than the whole cache is bypassed without error. An
        already resident content is only touched.

        Returns:
            Ids of the evicted contents, in eviction order
        """
        if content_id in self._entries:
            return self.touch(content_id, t)
        if size_bits > self.capacity_bits:
            return []

        evicted = []
        while self.used_bits + size_bits > self.capacity_bits and self._entries:
            victim = min(self._entries, key=self._victim_key)
            self.remove(victim)
            evicted.append(victim)

        self._entries[content_id] = CacheEntry(
            size_bits=size_bits, admitted_s=t, last_touch_s=t
        )
        self.used_bits += size_bits
        self.check_capacity()
        if evicted:
            logger.debug(
                "Cache eviction",
                extra={"node": self.node_id, "content_id": content_id, "evicted": evicted},
            )
        return evicted

    def remove(self, content_id: str) -> bool:
        entry = self._entries.pop(content_id, None)
        if entry is None:
            return False
        self.used_bits -= entry.size_bits
        if not self._entries:
            self.used_bits = 0.0
        return True

    def check_capacity(self) -> None:
        if self.used_bits > self.capacity_bits:
            raise SimulationInvariantError(
                "cache-capacity",
                f"node {self.node_id} holds {self.used_bits:g} bits "
                f"of {self.capacity_bits:g}",
            )
