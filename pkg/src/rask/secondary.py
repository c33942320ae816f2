"""Default value semantics: fragments store an indicator, the real value and
its block offset live in a shared auxiliary map keyed by (index id, range).

The map is reference-counted per key: successive generations of fragments can
register the same (index id, range) key before garbage collection drops the
shadowed older entry, and reads can only ever reach the newest generation, so
the newest payload wins while the count tracks live leaf entries.
"""

from __future__ import annotations

import itertools
import threading
from typing import Optional

from .ranges import Range, indicator, tombstone

_index_ids = itertools.count()


class MissingSecondaryEntry(KeyError):
    """An indicator value had no backing entry; signals index corruption."""


class SecondaryTree:
    """Shared map from (index id, fragmented range) to (original value, offset)."""

    def __init__(self):
        self._lock = threading.Lock()
        # (index_id, left, right) -> [original value, offset, live refcount]
        self._entries: dict[tuple[int, int, int], list] = {}

    def register(self, index_id: int, rng: Range, value: bytes, off: int) -> None:
        key = (index_id, rng.left, rng.right)
        with self._lock:
            slot = self._entries.get(key)
            if slot is None:
                self._entries[key] = [value, off, 1]
            else:
                slot[0] = value
                slot[1] = off
                slot[2] += 1

    def lookup(self, index_id: int, rng: Range) -> tuple[bytes, int]:
        key = (index_id, rng.left, rng.right)
        with self._lock:
            slot = self._entries.get(key)
            if slot is None:
                raise MissingSecondaryEntry(f"no entry for index {index_id} range {rng}")
            return slot[0], slot[1]

    def release(self, index_id: int, rng: Range) -> None:
        key = (index_id, rng.left, rng.right)
        with self._lock:
            slot = self._entries.get(key)
            if slot is None:
                raise MissingSecondaryEntry(f"release of unregistered {index_id} range {rng}")
            slot[2] -= 1
            if slot[2] <= 0:
                del self._entries[key]

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    def entries_for(self, index_id: int) -> dict[tuple[int, int], tuple[bytes, int, int]]:
        """Snapshot of (left, right) -> (value, off, refcount); used by leak checks."""
        with self._lock:
            return {
                (l, r): (v[0], v[1], v[2])
                for (idx, l, r), v in self._entries.items()
                if idx == index_id
            }


class SecondaryTreeSemantics:
    """ValueSemantics where non-first fragments hold an indicator payload.

    Dividing with sub.left == original.left keeps the stored value (re-keying
    the backing entry when that value is itself an indicator); any other sub
    registers (resolved original value, composed offset) and returns the
    indicator. Chained divisions resolve through the existing entry first so
    offsets compose instead of building lookup chains.
    """

    def __init__(self, tree: Optional[SecondaryTree] = None, payload_width: int = 10):
        self.tree = tree if tree is not None else SecondaryTree()
        self.index_id = next(_index_ids)
        self.payload_width = payload_width
        self._indicator = indicator(payload_width)
        self._tombstone = tombstone(payload_width)

    def divide_value(self, original: Range, value: bytes, sub: Range) -> bytes:
        if sub == original:
            return value
        if value == self._indicator:
            base, off = self.tree.lookup(self.index_id, original)
        else:
            base, off = value, 0
        if sub.left == original.left:
            if value == self._indicator:
                # First fragment keeps the indicator but under its new range key.
                self.tree.register(self.index_id, sub, base, off)
            return value
        self.tree.register(self.index_id, sub, base, off + sub.left - original.left)
        return self._indicator

    def resolve(self, stored: Range, value: bytes, sub: Range) -> tuple[bytes, int]:
        if value != self._indicator:
            return value, sub.left - stored.left
        base, off = self.tree.lookup(self.index_id, stored)
        return base, off + sub.left - stored.left

    def merge_range(
        self, a: Range, value_a: bytes, b: Range, value_b: bytes
    ) -> Optional[tuple[Range, bytes]]:
        if b.left != a.right + 1:
            return None
        if value_a == self._tombstone or value_b == self._tombstone:
            return None
        if value_b != self._indicator:
            # b starts its own write; it cannot continue a's extent.
            return None
        base_b, off_b = self.tree.lookup(self.index_id, b)
        if value_a == self._indicator:
            base_a, off_a = self.tree.lookup(self.index_id, a)
        else:
            base_a, off_a = value_a, 0
        if base_a != base_b or off_b != off_a + a.length:
            return None
        merged = Range(a.left, b.right)
        self.tree.release(self.index_id, b)
        if value_a == self._indicator:
            self.tree.release(self.index_id, a)
            self.tree.register(self.index_id, merged, base_a, off_a)
        return merged, value_a

    def on_entry_dropped(self, stored: Range, value: bytes) -> None:
        if value == self._indicator:
            self.tree.release(self.index_id, stored)
