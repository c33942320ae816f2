"""The log-structured leaf: append-only entry arrays, reverse-order ablation
search, and the two-stage garbage collection that reclaims covered ranges.

Entries are never mutated in place. Writers append at the tail; GC marks
covered entries during a reverse (newest to oldest) scan and then compacts
survivors forward, preserving their relative order. Readers take no locks:
they validate the header version counters before and after scanning.
"""

from __future__ import annotations

from typing import Callable, Optional

from .ranges import Range, intersect

DropHook = Optional[Callable[[Range, bytes], None]]


class LeafFull(RuntimeError):
    """Append attempted on a leaf whose entry count equals its capacity."""


class LeafHeader:
    """Entry count, fragmentation counter, version bits, and the deleted flag.

    v_gc / v_split / v_merge are 4-bit wrapping counters, odd exactly while
    the corresponding mutation is in progress.
    """

    __slots__ = ("entry_count", "n_frag", "v_gc", "v_split", "v_merge", "deleted")

    def __init__(self):
        self.entry_count = 0
        self.n_frag = 0
        self.v_gc = 0
        self.v_split = 0
        self.v_merge = 0
        self.deleted = False


class Leaf:
    """Anchor key, header, parallel range/value arrays, and neighbor links."""

    __slots__ = ("anchor", "capacity", "header", "ranges", "values", "prev", "next",
                 "lock", "freed")

    def __init__(self, anchor: int, capacity: int, lock):
        self.anchor = anchor
        self.capacity = capacity
        self.header = LeafHeader()
        self.ranges: list = [None] * capacity
        self.values: list = [None] * capacity
        self.prev: Optional["Leaf"] = None
        self.next: Optional["Leaf"] = None
        self.lock = lock
        self.freed = False

    def is_full(self) -> bool:
        return self.header.entry_count >= self.capacity

    def entries(self) -> list[tuple[Range, bytes]]:
        n = self.header.entry_count
        return list(zip(self.ranges[:n], self.values[:n]))

    def versions(self) -> tuple[int, int, int]:
        h = self.header
        return h.v_gc, h.v_split, h.v_merge

    def poison(self) -> None:
        """Invalidate a reclaimed leaf so any late access fails loudly."""
        self.freed = True
        self.ranges = None
        self.values = None
        self.header.entry_count = 0

    def __repr__(self):
        return f"Leaf(anchor={self.anchor}, n={self.header.entry_count})"


def append(leaf: Leaf, rng: Range, value: bytes) -> None:
    """Append one entry at the tail. Caller holds the leaf write lock."""
    n = leaf.header.entry_count
    if n >= leaf.capacity:
        raise LeafFull(f"leaf anchor={leaf.anchor} at capacity {leaf.capacity}")
    leaf.ranges[n] = rng
    leaf.values[n] = value
    leaf.header.entry_count = n + 1


class UnfoundList:
    """Sorted, pairwise-disjoint subranges of a search target not yet resolved."""

    __slots__ = ("_ranges",)

    def __init__(self, ranges: Optional[list[Range]] = None):
        self._ranges = list(ranges) if ranges else []

    @property
    def empty(self) -> bool:
        return not self._ranges

    def ranges(self) -> list[Range]:
        return list(self._ranges)

    def ablate(self, r: Range) -> list[Range]:
        """Remove r's overlap from the list; returns the removed subranges.

        The first overlapping subrange is found by linear search; subsequent
        ones are consumed sequentially.
        """
        rs = self._ranges
        n = len(rs)
        i = 0
        while i < n and rs[i].right < r.left:
            i += 1
        if i == n or rs[i].left > r.right:
            return []
        hits = []
        replacement = []
        j = i
        while j < n and rs[j].left <= r.right:
            u = rs[j]
            lo = u.left if u.left > r.left else r.left
            hi = u.right if u.right < r.right else r.right
            hits.append(Range(lo, hi))
            if u.left < lo:
                replacement.append(Range(u.left, lo - 1))
            if u.right > hi:
                replacement.append(Range(hi + 1, u.right))
            j += 1
        rs[i:j] = replacement
        return hits


class NonOverlapList:
    """Running blockwise union of processed ranges as sorted disjoint entries.

    Adjacent entries coalesce, so containment in the union is always
    containment in a single entry.
    """

    __slots__ = ("_ranges",)

    def __init__(self):
        self._ranges: list[Range] = []

    def entries(self) -> list[Range]:
        return list(self._ranges)

    def __len__(self) -> int:
        return len(self._ranges)

    def fold(self, r: Range) -> None:
        rs = self._ranges
        n = len(rs)
        i = 0
        lo, hi = r.left, r.right
        while i < n and rs[i].right < lo - 1:
            i += 1
        j = i
        while j < n and rs[j].left <= hi + 1:
            if rs[j].left < lo:
                lo = rs[j].left
            if rs[j].right > hi:
                hi = rs[j].right
            j += 1
        rs[i:j] = [Range(lo, hi)]

    def covers(self, r: Range) -> bool:
        for u in self._ranges:
            if u.left > r.left:
                return False
            if r.right <= u.right:
                return True
        return False

    def remaining_after(self, r: Range) -> list[Range]:
        """r minus every union entry, as sorted disjoint pieces."""
        pieces = []
        lo = r.left
        for u in self._ranges:
            if u.right < lo:
                continue
            if u.left > r.right:
                break
            if u.left > lo:
                pieces.append(Range(lo, u.left - 1))
            lo = u.right + 1
            if lo > r.right:
                return pieces
        if lo <= r.right:
            pieces.append(Range(lo, r.right))
        return pieces


class LTMap(dict):
    """Left bound -> maximum right bound seen, for the lightweight GC scan."""

    def shadowed(self, left: int, right: int) -> bool:
        rec = self.get(left)
        return rec is not None and right <= rec

    def note(self, left: int, right: int) -> None:
        rec = self.get(left)
        if rec is None or right > rec:
            self[left] = right


class LeafHit:
    """One ablation hit: the found subrange plus the entry it came from."""

    __slots__ = ("sub", "stored", "value")

    def __init__(self, sub: Range, stored: Range, value: bytes):
        self.sub = sub
        self.stored = stored
        self.value = value

    def __repr__(self):
        return f"LeafHit({self.sub} from {self.stored})"


def ablation_search(leaf: Leaf, unfound: UnfoundList) -> tuple[list[LeafHit], UnfoundList, int]:
    """Reverse scan the leaf, ablating the unfound list with each entry.

    Caller pre-intersects the unfound ranges with the leaf's range space.
    Returns (hits, remaining unfound, entries examined); the scan stops the
    moment nothing is left unfound.
    """
    ranges = leaf.ranges
    values = leaf.values
    hits: list[LeafHit] = []
    examined = 0
    for i in range(leaf.header.entry_count - 1, -1, -1):
        if unfound.empty:
            break
        examined += 1
        r = ranges[i]
        subs = unfound.ablate(r)
        if subs:
            v = values[i]
            for s in subs:
                hits.append(LeafHit(s, r, v))
    return hits, unfound, examined


def _compact(leaf: Leaf, keep: list[bool], on_drop: DropHook) -> int:
    """Remove marked entries, shifting survivors forward in order."""
    ranges = leaf.ranges
    values = leaf.values
    n = leaf.header.entry_count
    w = 0
    for i in range(n):
        if keep[i]:
            if w != i:
                ranges[w] = ranges[i]
                values[w] = values[i]
            w += 1
        elif on_drop is not None:
            on_drop(ranges[i], values[i])
    leaf.header.entry_count = w
    return n - w


def _lightweight_pass(leaf: Leaf, on_drop: DropHook) -> int:
    n = leaf.header.entry_count
    ranges = leaf.ranges
    lt = LTMap()
    keep = [True] * n
    removed = 0
    for i in range(n - 1, -1, -1):
        r = ranges[i]
        if lt.shadowed(r.left, r.right):
            keep[i] = False
            removed += 1
        else:
            lt.note(r.left, r.right)
    if removed:
        _compact(leaf, keep, on_drop)
    return removed


def gc_entry_lists(
    ranges: list[Range],
    values: list[bytes],
    tombstone: bytes,
    extra_deleted: Optional[list[Range]] = None,
    on_drop: DropHook = None,
) -> tuple[list[Range], list[bytes], NonOverlapList, int]:
    """Normal-GC core over parallel entry lists (newest last).

    Reverse scan keeping the union of surviving processed ranges; an entry is
    dropped when the blocks left after shrinking by newer tombstone portions
    are all covered by that union. Tombstones contribute to coverage, then are
    themselves dropped once no older surviving data entry overlaps them.
    Returns (surviving ranges, surviving values, union, dropped count).
    """
    n = len(ranges)
    union = NonOverlapList()
    deleted = NonOverlapList()
    if extra_deleted:
        for r in extra_deleted:
            union.fold(r)
            deleted.fold(r)
    keep = [True] * n
    tomb_idx = []
    for i in range(n - 1, -1, -1):
        r = ranges[i]
        visible = deleted.remaining_after(r)
        if all(union.covers(p) for p in visible):
            keep[i] = False
            continue
        if values[i] == tombstone:
            tomb_idx.append(i)
            deleted.fold(r)
        union.fold(r)
    for i in tomb_idx:
        t = ranges[i]
        needed = False
        for j in range(i):
            if keep[j] and values[j] != tombstone and intersect(ranges[j], t) is not None:
                needed = True
                break
        if not needed:
            keep[i] = False
    out_ranges = []
    out_values = []
    dropped = 0
    for i in range(n):
        if keep[i]:
            out_ranges.append(ranges[i])
            out_values.append(values[i])
        else:
            dropped += 1
            if on_drop is not None:
                on_drop(ranges[i], values[i])
    return out_ranges, out_values, union, dropped


def _normal_pass(
    leaf: Leaf,
    tombstone: bytes,
    extra_deleted: Optional[list[Range]],
    on_drop: DropHook,
) -> tuple[int, NonOverlapList]:
    n = leaf.header.entry_count
    out_r, out_v, union, dropped = gc_entry_lists(
        leaf.ranges[:n], leaf.values[:n], tombstone, extra_deleted, on_drop
    )
    if dropped:
        for i, (r, v) in enumerate(zip(out_r, out_v)):
            leaf.ranges[i] = r
            leaf.values[i] = v
        leaf.header.entry_count = len(out_r)
    return dropped, union


def _bump_gc(leaf: Leaf) -> None:
    leaf.header.v_gc = (leaf.header.v_gc + 1) % 16


def lightweight_gc(leaf: Leaf, on_drop: DropHook = None) -> int:
    """Drop entries fully covered by a newer entry with the same left bound."""
    _bump_gc(leaf)
    try:
        return _lightweight_pass(leaf, on_drop)
    finally:
        _bump_gc(leaf)


def normal_gc(
    leaf: Leaf,
    tombstone: bytes,
    deleted_list: Optional[list[Range]] = None,
    on_drop: DropHook = None,
) -> tuple[int, NonOverlapList]:
    """Drop every entry covered by the union of newer ones; returns the union.

    deleted_list, when given, supplies extra erasure ranges treated as newer
    than every entry (beyond the leaf's own tombstones, which are collected
    during the same scan).
    """
    _bump_gc(leaf)
    try:
        return _normal_pass(leaf, tombstone, deleted_list, on_drop)
    finally:
        _bump_gc(leaf)


def two_stage_gc(
    leaf: Leaf, tombstone: bytes, on_drop: DropHook = None
) -> tuple[int, Optional[NonOverlapList], bool]:
    """Lightweight pass first; the normal pass runs only if nothing was freed.

    Returns (reclaimed, union or None, lightweight_effective). The union is
    present exactly when the normal pass ran, for reuse by a following split.
    """
    _bump_gc(leaf)
    try:
        freed = _lightweight_pass(leaf, on_drop)
        if freed:
            return freed, None, True
        freed, union = _normal_pass(leaf, tombstone, None, on_drop)
        return freed, union, False
    finally:
        _bump_gc(leaf)
