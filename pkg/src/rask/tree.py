"""The range-keyed index facade: put / get / delete over the whole structure.

Writes lock one leaf at a time, handing the lock to the next target leaf
before releasing the current one so cross-leaf fragments of concurrent
writes keep a consistent order. Reads are lock-free: they validate each
leaf's version bits before and after scanning, retrying locally (a bounded
number of optimistic attempts, then once more under the leaf lock). A cursor
tracks the portion of the target already resolved, so retries and structural
changes never double-count blocks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional

from . import leaf as leafmod
from . import smo
from .anchors import make_anchor_map
from .concurrency import EpochDomain, make_lock
from .leaf import Leaf, NonOverlapList, UnfoundList
from .ranges import (
    ADDRESS_MAX,
    DEFAULT_PAYLOAD_WIDTH,
    Range,
    check_payload,
    indicator,
    tombstone,
)
from .secondary import MissingSecondaryEntry, SecondaryTreeSemantics

_OPTIMISTIC_ATTEMPTS = 64


@dataclass(frozen=True)
class RaskConfig:
    leaf_capacity: int = 16
    merge_threshold: int = 4
    payload_width: int = DEFAULT_PAYLOAD_WIDTH
    thread_safe: bool = True
    anchor_index: str = "art"
    reclaim_batch: int = 64


class Hit(NamedTuple):
    """One get result: a found subrange, its resolved value, and the block
    offset of the subrange start from the originating write's start."""

    range: Range
    value: bytes
    offset: int


class RaskStats:
    __slots__ = (
        "puts", "gets", "deletes", "fragment_insertions",
        "gc_invocations", "lightweight_effective", "reclaimed_lightweight",
        "reclaimed_normal", "normal_passes",
        "splits", "splits_dividing_none", "second_splits", "split_imbalance_sum",
        "merges", "resplits", "merge_attempts",
        "searches", "entries_examined", "read_retries",
        "leaves_created", "leaves_retired",
    )

    def __init__(self):
        for name in self.__slots__:
            setattr(self, name, 0)

    def snapshot(self) -> dict:
        return {name: getattr(self, name) for name in self.__slots__}

    def gc_per_write(self) -> float:
        writes = self.puts + self.deletes
        return self.gc_invocations / writes if writes else 0.0

    def lightweight_effectiveness(self) -> float:
        return self.lightweight_effective / self.gc_invocations if self.gc_invocations else 0.0

    def split_divide_none_ratio(self) -> float:
        return self.splits_dividing_none / self.splits if self.splits else 0.0

    def mean_split_imbalance(self) -> float:
        return self.split_imbalance_sum / self.splits if self.splits else 0.0


class RaskIndex:
    """Thread-safe ordered index keyed by block ranges."""

    def __init__(self, config: Optional[RaskConfig] = None, semantics=None):
        self.config = config or RaskConfig()
        width = self.config.payload_width
        self.tombstone = tombstone(width)
        self.indicator = indicator(width)
        if semantics is None:
            semantics = SecondaryTreeSemantics(payload_width=width)
        self.semantics = semantics
        self.stats = RaskStats()
        self.epochs = EpochDomain(self.config.reclaim_batch)
        self._anchors = make_anchor_map(self.config.anchor_index)
        self.head = self._new_leaf(0)
        self._anchors.insert(0, self.head)
        # Test hook: when set to a list, every physical append is recorded as
        # (global seq, range, value) under the owning leaf's lock.
        self.append_log: Optional[list] = None
        self._append_seq = itertools.count(1)

    # -- construction helpers ----------------------------------------------

    def _new_leaf(self, anchor: int) -> Leaf:
        self.stats.leaves_created += 1
        return Leaf(anchor, self.config.leaf_capacity, make_lock(self.config.thread_safe))

    def _on_drop(self, rng: Range, value: bytes) -> None:
        self.semantics.on_entry_dropped(rng, value)

    # -- leaf location -----------------------------------------------------

    def _next_live(self, leaf: Leaf) -> Optional[Leaf]:
        n = leaf.next
        while n is not None and n.header.deleted:
            n = n.next
        return n

    def _prev_live(self, leaf: Leaf) -> Optional[Leaf]:
        p = leaf.prev
        while p is not None and p.header.deleted:
            p = p.prev
        return p

    def _locate_live(self, key: int) -> Leaf:
        """Floor lookup plus linked-list correction, skipping deleted leaves."""
        leaf = self._anchors.floor_lookup(key)
        if leaf is None:
            leaf = self.head
        while leaf.header.deleted:
            leaf = leaf.prev if leaf.prev is not None else self.head
        while True:
            if key < leaf.anchor:
                prev = self._prev_live(leaf)
                if prev is None:
                    return self.head
                leaf = prev
                continue
            nxt = self._next_live(leaf)
            if nxt is not None and key >= nxt.anchor:
                leaf = nxt
                continue
            return leaf

    def _lock_owner(self, key: int) -> tuple[Leaf, int]:
        """Lock and return the live leaf owning key, plus its space upper bound."""
        while True:
            leaf = self._locate_live(key)
            leaf.lock.acquire()
            if leaf.header.deleted or key < leaf.anchor:
                leaf.lock.release()
                continue
            nxt = leaf.next  # stable and live while leaf is locked
            hi = nxt.anchor - 1 if nxt is not None else ADDRESS_MAX
            if key > hi:
                leaf.lock.release()
                continue
            return leaf, hi

    # -- public operations ---------------------------------------------------

    def put(self, rng: Range, value: bytes) -> None:
        self._check_range(rng)
        check_payload(value, self.config.payload_width)
        self.stats.puts += 1
        self._apply_write(rng, value, False)

    def delete(self, rng: Range) -> None:
        self._check_range(rng)
        self.stats.deletes += 1
        self._apply_write(rng, self.tombstone, True)

    @staticmethod
    def _check_range(rng: Range) -> None:
        if not (0 <= rng.left <= rng.right <= ADDRESS_MAX):
            raise ValueError(f"invalid range {rng!r}")

    def _apply_write(self, rng: Range, value: bytes, is_delete: bool) -> None:
        self.epochs.pin()
        merge_checks: list[Leaf] = []
        try:
            leaf, hi = self._lock_owner(rng.left)
            held: list[Leaf] = [leaf]
            while True:
                portion = Range(leaf.anchor if rng.left < leaf.anchor else rng.left,
                                rng.right if rng.right < hi else hi)
                is_fragment = portion.left != rng.left
                if is_delete:
                    pval = self.tombstone
                elif portion == rng:
                    pval = value
                else:
                    pval = self.semantics.divide_value(rng, value, portion)
                did_split = False
                if leaf.is_full():
                    self.stats.gc_invocations += 1
                    freed, union, lw_eff = leafmod.two_stage_gc(
                        leaf, self.tombstone, self._on_drop
                    )
                    if lw_eff:
                        self.stats.lightweight_effective += 1
                        self.stats.reclaimed_lightweight += freed
                    else:
                        self.stats.normal_passes += 1
                        self.stats.reclaimed_normal += freed
                    if leaf.is_full():
                        held = self._split_locked(leaf, portion, pval, union, hi)
                        did_split = True
                if not did_split:
                    leafmod.append(leaf, portion, pval)
                    self._record_append(portion, pval)
                    if is_fragment or is_delete:
                        leaf.header.n_frag += 1
                        self.stats.fragment_insertions += 1
                    if (leaf.header.n_frag > self.config.merge_threshold
                            and leaf.prev is not None and leaf not in merge_checks):
                        merge_checks.append(leaf)
                if hi >= rng.right:
                    break
                # Lock handover: acquire the next target before releasing.
                tail = held[-1]
                nxt = tail.next
                nxt.lock.acquire()
                for h in held:
                    h.lock.release()
                self._publish_pending(held)
                leaf, held = nxt, [nxt]
                peer = leaf.next
                hi = peer.anchor - 1 if peer is not None else ADDRESS_MAX
            for h in held:
                h.lock.release()
            self._publish_pending(held)
        finally:
            self.epochs.unpin()
        for lf in merge_checks:
            self._maybe_merge_resplit(lf)

    def _record_append(self, rng: Range, value: bytes) -> None:
        log = self.append_log
        if log is not None:
            log.append((next(self._append_seq), rng, value))

    # -- split ---------------------------------------------------------------

    def _publish_pending(self, held: list[Leaf]) -> None:
        """Publish anchors of freshly split-off leaves after their locks drop."""
        for lf in held[1:]:
            self._anchors.insert(lf.anchor, lf)

    def _split_locked(
        self, leaf: Leaf, pend_rng: Range, pend_val: bytes, union: Optional[NonOverlapList],
        space_hi: int,
    ) -> list[Leaf]:
        """Split a still-full leaf, inserting the pending entry in the same
        critical section. Returns the locked output leaves, leftmost first;
        caller releases locks and then publishes anchors of held[1:]."""
        assert union is not None, "split requires the union from the preceding normal GC"
        n = leaf.header.entry_count
        entries = list(zip(leaf.ranges[:n], leaf.values[:n]))
        entries.append((pend_rng, pend_val))
        self._record_append(pend_rng, pend_val)
        union.fold(pend_rng)
        plan = smo.select_split_point([r for r, _ in entries], union, leaf.anchor)
        sides = self._partition_recursive(entries, plan, leaf.anchor, strict_theorem=True)

        self.stats.splits += 1
        if all(d == 0 for _, _, d in sides):
            self.stats.splits_dividing_none += 1
        self.stats.split_imbalance_sum += abs(len(sides[0][1]) - len(sides[-1][1]))

        h = leaf.header
        h.v_split = (h.v_split + 1) % 16
        anchor0, ents0, _ = sides[0]
        assert anchor0 == leaf.anchor
        for i, (r, v) in enumerate(ents0):
            leaf.ranges[i] = r
            leaf.values[i] = v
        h.entry_count = len(ents0)
        h.n_frag = 0
        old_next = leaf.next
        held = [leaf]
        prev = leaf
        for anchor_k, ents_k, divided_k in sides[1:]:
            fresh = self._new_leaf(anchor_k)
            fresh.lock.acquire()
            for i, (r, v) in enumerate(ents_k):
                fresh.ranges[i] = r
                fresh.values[i] = v
            fresh.header.entry_count = len(ents_k)
            fresh.header.n_frag = divided_k
            fresh.prev = prev
            prev.next = fresh
            prev = fresh
            held.append(fresh)
        prev.next = old_next
        if old_next is not None:
            old_next.prev = prev
        h.v_split = (h.v_split + 1) % 16
        return held

    def _partition_recursive(
        self, entries, plan: smo.SplitPlan, anchor: int, strict_theorem: bool,
    ) -> list[tuple[int, list, int]]:
        """Partition at plan.cut, then resolve any overflowing side by GC and
        further splits. In strict mode (put-path splits of N+1 ranges) at most
        one extra split can occur, per the no-overflow guarantee; resplits of
        up to 2N merged entries may cascade. Returns [(anchor, entries,
        divided)] left to right, each fitting within capacity."""
        cap = self.config.leaf_capacity
        left, right, divided = smo.partition_entries(
            entries, plan.cut, self.semantics, self.tombstone
        )
        pending: list[tuple[int, list, int]] = [
            (anchor, left, 0), (plan.cut + 1, right, divided)
        ]
        out: list[tuple[int, list, int]] = []
        extra_splits = 0
        while pending:
            anch, ents, div = pending.pop(0)
            if len(ents) > cap:
                rr, vv, _, _dropped = leafmod.gc_entry_lists(
                    [r for r, _ in ents], [v for _, v in ents],
                    self.tombstone, None, self._on_drop,
                )
                ents = list(zip(rr, vv))
            if len(ents) <= cap:
                out.append((anch, ents, div))
                continue
            extra_splits += 1
            if strict_theorem:
                assert extra_splits <= 1, "second split did not resolve the overflow"
                self.stats.second_splits += 1
            else:
                assert extra_splits <= 16, "resplit cascade runaway"
            ranges_only = [r for r, _ in ents]
            cut2 = smo.uniform_bound_cut(ranges_only)
            if cut2 is None:
                u = NonOverlapList()
                for r in ranges_only:
                    u.fold(r)
                cut2 = smo.select_split_point(ranges_only, u, anch).cut
            l2, r2, d2 = smo.partition_entries(ents, cut2, self.semantics, self.tombstone)
            pending.insert(0, (cut2 + 1, r2, d2))
            pending.insert(0, (anch, l2, 0))
        return out

    # -- merge / resplit ------------------------------------------------------

    def _maybe_merge_resplit(self, leaf: Leaf) -> smo.MergeOutcome:
        self.stats.merge_attempts += 1
        self.epochs.pin()
        try:
            for _ in range(4):
                left = leaf.prev
                if left is None:
                    return smo.MergeOutcome.NONE
                left.lock.acquire()
                if left.header.deleted or left.next is not leaf:
                    left.lock.release()
                    continue
                leaf.lock.acquire()
                if leaf.header.deleted:
                    leaf.lock.release()
                    left.lock.release()
                    return smo.MergeOutcome.NONE
                if leaf.header.n_frag <= self.config.merge_threshold:
                    leaf.lock.release()
                    left.lock.release()
                    return smo.MergeOutcome.NONE
                return self._merge_locked(left, leaf)
            return smo.MergeOutcome.NONE
        finally:
            self.epochs.unpin()

    def _merge_locked(self, left: Leaf, leaf: Leaf) -> smo.MergeOutcome:
        cap = self.config.leaf_capacity
        lh, rh = left.header, leaf.header
        new_leaves: list[Leaf] = []
        lh.v_merge = (lh.v_merge + 1) % 16
        rh.v_merge = (rh.v_merge + 1) % 16
        try:
            leafmod.normal_gc(left, self.tombstone, None, self._on_drop)
            leafmod.normal_gc(leaf, self.tombstone, None, self._on_drop)
            merged, _pairs = smo.coalesce_pairs(left.entries(), leaf.entries(), self.semantics)
            if len(merged) <= cap:
                for i, (r, v) in enumerate(merged):
                    left.ranges[i] = r
                    left.values[i] = v
                lh.entry_count = len(merged)
                lh.n_frag = 0
                self._unlink_locked(left, leaf)
                self.stats.merges += 1
                outcome = smo.MergeOutcome.MERGED
            else:
                union = NonOverlapList()
                for r, _ in merged:
                    union.fold(r)
                plan = smo.select_split_point([r for r, _ in merged], union, left.anchor)
                sides = self._partition_recursive(merged, plan, left.anchor,
                                                  strict_theorem=False)
                anchor0, ents0, _ = sides[0]
                assert anchor0 == left.anchor
                for i, (r, v) in enumerate(ents0):
                    left.ranges[i] = r
                    left.values[i] = v
                lh.entry_count = len(ents0)
                lh.n_frag = 0
                old_next = leaf.next
                prev = left
                for anchor_k, ents_k, divided_k in sides[1:]:
                    fresh = self._new_leaf(anchor_k)
                    fresh.lock.acquire()
                    for i, (r, v) in enumerate(ents_k):
                        fresh.ranges[i] = r
                        fresh.values[i] = v
                    fresh.header.entry_count = len(ents_k)
                    fresh.header.n_frag = divided_k
                    fresh.prev = prev
                    prev.next = fresh
                    prev = fresh
                    new_leaves.append(fresh)
                prev.next = old_next
                if old_next is not None:
                    old_next.prev = prev
                rh.deleted = True
                self.stats.resplits += 1
                outcome = smo.MergeOutcome.RESPLIT
        finally:
            lh.v_merge = (lh.v_merge + 1) % 16
            rh.v_merge = (rh.v_merge + 1) % 16
            for fresh in new_leaves:
                fresh.lock.release()
            leaf.lock.release()
            left.lock.release()
        self._anchors.remove(leaf.anchor)
        for fresh in new_leaves:
            self._anchors.insert(fresh.anchor, fresh)
        self.epochs.retire(leaf)
        self.stats.leaves_retired += 1
        return outcome

    def _unlink_locked(self, left: Leaf, leaf: Leaf) -> None:
        """Splice leaf out; its right neighbor's prev is protected by our lock
        on leaf (we are its left neighbor)."""
        nxt = leaf.next
        left.next = nxt
        if nxt is not None:
            nxt.prev = left
        leaf.header.deleted = True

    # -- get -------------------------------------------------------------------

    def get(self, rng: Range) -> list[Hit]:
        self._check_range(rng)
        self.stats.gets += 1
        self.epochs.pin()
        try:
            results: list[Hit] = []
            cursor = rng.left
            while cursor <= rng.right:
                cursor = self._search_one_leaf(rng, cursor, results)
            return results
        finally:
            self.epochs.unpin()

    def _search_one_leaf(self, rng: Range, cursor: int, results: list[Hit]) -> int:
        """Search the leaf owning cursor for [cursor, ...]; extend results and
        return the next cursor. Optimistic with bounded retries, then locked."""
        attempts = 0
        while True:
            attempts += 1
            locked = attempts > _OPTIMISTIC_ATTEMPTS
            leaf = self._locate_live(cursor)
            if locked:
                leaf.lock.acquire()
            try:
                h = leaf.header
                pre = (h.v_gc, h.v_split, h.v_merge)
                if not locked and (pre[0] | pre[1] | pre[2]) & 1:
                    self.stats.read_retries += 1
                    continue
                if h.deleted or cursor < leaf.anchor:
                    self.stats.read_retries += 1
                    continue
                nxt = self._next_live(leaf)
                hi = nxt.anchor - 1 if nxt is not None else ADDRESS_MAX
                if hi < cursor:
                    self.stats.read_retries += 1
                    continue
                sub = Range(cursor, rng.right if rng.right < hi else hi)
                hits, _, examined = leafmod.ablation_search(leaf, UnfoundList([sub]))
                resolved = []
                try:
                    for lh in hits:
                        if lh.value == self.tombstone:
                            continue
                        value, off = self.semantics.resolve(lh.stored, lh.value, lh.sub)
                        resolved.append(Hit(lh.sub, value, off))
                except MissingSecondaryEntry:
                    if locked:
                        raise
                    self.stats.read_retries += 1
                    continue
                if not locked and (h.v_gc, h.v_split, h.v_merge) != pre:
                    self.stats.read_retries += 1
                    continue
                self.stats.searches += 1
                self.stats.entries_examined += examined
                resolved.sort(key=lambda hit: hit.range.left)
                results.extend(resolved)
                return hi + 1
            finally:
                if locked:
                    leaf.lock.release()

    # -- maintenance ------------------------------------------------------------

    def reclaim_epochs(self) -> None:
        self.epochs.reclaim()

    def force_gc_sweep(self) -> int:
        """Run normal GC over every live leaf; returns entries reclaimed."""
        total = 0
        self.epochs.pin()
        try:
            leaf: Optional[Leaf] = self.head
            while leaf is not None:
                leaf.lock.acquire()
                try:
                    if not leaf.header.deleted:
                        freed, _ = leafmod.normal_gc(leaf, self.tombstone, None, self._on_drop)
                        total += freed
                    nxt = leaf.next
                finally:
                    leaf.lock.release()
                leaf = nxt
            return total
        finally:
            self.epochs.unpin()

    def leaves(self) -> list[Leaf]:
        out = []
        leaf: Optional[Leaf] = self.head
        while leaf is not None:
            if not leaf.header.deleted:
                out.append(leaf)
            leaf = leaf.next
        return out

    def leaf_count(self) -> int:
        return len(self.leaves())

    def entry_count(self) -> int:
        return sum(lf.header.entry_count for lf in self.leaves())

    def memory_estimate(self) -> int:
        """Structural byte accounting: leaves plus the secondary map."""
        width = self.config.payload_width
        per_leaf = 8 + 8 + self.config.leaf_capacity * (12 + width) + 2 * 8
        total = self.leaf_count() * per_leaf
        sec = getattr(self.semantics, "tree", None)
        if sec is not None:
            total += len(sec) * (8 + 12 + width + 4)
        return total

    def check_invariants(self) -> None:
        """Structural audit used by tests; quiescent state only."""
        leaves = self.leaves()
        anchors = [lf.anchor for lf in leaves]
        assert anchors == sorted(anchors), "leaf anchors out of order"
        assert len(set(anchors)) == len(anchors), "duplicate anchors"
        assert anchors and anchors[0] == 0, "missing sentinel leaf"
        published = self._anchors.keys()
        assert published == anchors, f"anchor index mismatch: {published} vs {anchors}"
        for i, lf in enumerate(leaves):
            hi = leaves[i + 1].anchor - 1 if i + 1 < len(leaves) else ADDRESS_MAX
            n = lf.header.entry_count
            assert n <= lf.capacity
            for r in lf.ranges[:n]:
                assert lf.anchor <= r.left and r.right <= hi, (
                    f"entry {r} outside space [{lf.anchor}, {hi}] of {lf}"
                )

    def secondary_accounting(self) -> tuple[int, int]:
        """(orphaned map entries, unresolvable indicator entries); quiescent."""
        sem = self.semantics
        tree = getattr(sem, "tree", None)
        if tree is None:
            return 0, 0
        live: dict[tuple[int, int], int] = {}
        for lf in self.leaves():
            n = lf.header.entry_count
            for r, v in zip(lf.ranges[:n], lf.values[:n]):
                if v == self.indicator:
                    key = (r.left, r.right)
                    live[key] = live.get(key, 0) + 1
        mapped = tree.entries_for(sem.index_id)
        orphaned = sum(
            info[2] - live.get(key, 0)
            for key, info in mapped.items()
            if info[2] > live.get(key, 0)
        )
        missing = sum(1 for key in live if key not in mapped)
        return orphaned, missing
