"""Brute-force per-block reference map used as ground truth in tests.

Every block of the (bounded) key space carries the latest write covering it:
the originating range's left bound, an interned value id, and a global
sequence number. Deterministic, O(length) per operation, and entirely
independent of the index implementation it checks.
"""

from __future__ import annotations

import numpy as np

from .ranges import Range


class FlatRangeMap:
    """Blockwise latest-writer map over a key space of `size` blocks."""

    def __init__(self, size: int):
        if size > 2**24:
            raise ValueError("oracle key space capped at 2^24 blocks")
        self.size = size
        self._seq = np.zeros(size, dtype=np.int64)        # 0 = never written
        self._origin = np.zeros(size, dtype=np.int64)     # origin range left bound
        self._value_id = np.full(size, -1, dtype=np.int64)
        self._values: list[bytes] = []
        self._ids: dict[bytes, int] = {}
        self._next_seq = 1

    def _intern(self, value: bytes) -> int:
        vid = self._ids.get(value)
        if vid is None:
            vid = len(self._values)
            self._values.append(value)
            self._ids[value] = vid
        return vid

    def o_put(self, rng: Range, value: bytes) -> None:
        lo, hi = rng.left, rng.right + 1
        self._seq[lo:hi] = self._next_seq
        self._origin[lo:hi] = rng.left
        self._value_id[lo:hi] = self._intern(value)
        self._next_seq += 1

    def o_delete(self, rng: Range) -> None:
        lo, hi = rng.left, rng.right + 1
        self._seq[lo:hi] = self._next_seq
        self._value_id[lo:hi] = -1
        self._next_seq += 1

    def o_get(self, rng: Range) -> list[tuple[Range, bytes, int]]:
        """Maximal runs of written blocks sharing (origin, value), with the
        run's offset from the origin range's start."""
        lo, hi = rng.left, rng.right + 1
        vids = self._value_id[lo:hi]
        origins = self._origin[lo:hi]
        n = hi - lo
        runs = []
        i = 0
        while i < n:
            vid = vids[i]
            if vid < 0:
                i += 1
                continue
            origin = origins[i]
            j = i + 1
            while j < n and vids[j] == vid and origins[j] == origin:
                j += 1
            start = lo + i
            runs.append((Range(start, lo + j - 1), self._values[vid], start - int(origin)))
            i = j
        return runs
