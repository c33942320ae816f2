"""Structural modification planning: split-point selection, entry
partitioning at a cut, and fragment coalescing for merges.

A split is modeled as an integer cut c: blocks <= c stay in the left leaf,
blocks >= c+1 move to the new right leaf (anchor c+1). Entries crossing the
cut divide into [l, c] and [c+1, r]. Candidate cuts come from the disjoint
union built by the preceding GC pass and never divide anything; when the
union is a single cluster the cut is placed next to a median boundary, on
the side that provably bounds overflow to at most one output, resolvable by
one follow-up split.
"""

from __future__ import annotations

from enum import Enum
from typing import Optional

from .ranges import Range, intersect
from .leaf import NonOverlapList


class Unsplittable(AssertionError):
    """No usable split point exists; impossible for a GC'd full leaf."""


class SplitPlan:
    """Chosen cut plus the selection diagnostics."""

    __slots__ = ("cut", "split_point", "from_candidates", "candidates",
                 "boundaries", "p_lmax", "p_rmin", "balance")

    def __init__(self, cut, split_point, from_candidates, candidates,
                 boundaries, p_lmax, p_rmin, balance):
        self.cut = cut
        self.split_point = split_point        # first block of the right side
        self.from_candidates = from_candidates
        self.candidates = candidates
        self.boundaries = boundaries
        self.p_lmax = p_lmax
        self.p_rmin = p_rmin
        self.balance = balance

    def __repr__(self):
        kind = "candidate" if self.from_candidates else "median"
        return f"SplitPlan(cut={self.cut}, {kind})"


def left_count(ranges: list[Range], cut: int) -> int:
    """Entries the cut sends (wholly or as a left piece) to the left side."""
    return sum(1 for r in ranges if r.left <= cut)


def right_count(ranges: list[Range], cut: int) -> int:
    return sum(1 for r in ranges if r.right > cut)


def select_split_point(ranges: list[Range], union: NonOverlapList, anchor: int) -> SplitPlan:
    """Pick the cut for splitting `ranges` (leaf entries plus the pending one).

    With >= 2 union clusters: candidates are the cluster left bounds except
    the first; take the one балancing entry counts best, ties to the smaller
    key. These cuts fall in inter-cluster gaps and divide nothing. With a
    single cluster: take a median of the 2(N+1) sorted bounds, rejecting a
    median equal to the smallest or largest bound (smaller median wins when
    both qualify), and place the cut on the side of it that keeps the
    no-overflow guarantee.
    """
    p_lmax = max(r.left for r in ranges)
    p_rmin = min(r.right for r in ranges)
    clusters = union.entries()
    if len(clusters) >= 2:
        total = len(ranges)
        best_point = None
        best_score = None
        candidates = [u.left for u in clusters[1:]]
        for c in candidates:
            lc = sum(1 for r in ranges if r.left < c)
            score = abs(2 * lc - total)
            if best_score is None or score < best_score:
                best_score = score
                best_point = c
        return SplitPlan(best_point - 1, best_point, True, candidates, None,
                         p_lmax, p_rmin, best_score)

    bounds = sorted([r.left for r in ranges] + [r.right for r in ranges])
    m = len(bounds)
    medians = (bounds[m // 2 - 1], bounds[m // 2])
    smallest, largest = bounds[0], bounds[-1]
    v = None
    for cand in medians:
        if cand != smallest and cand != largest:
            v = cand
            break
    if v is None:
        raise Unsplittable(f"all boundaries degenerate: {bounds}")
    if p_rmin < p_lmax:
        # Any cut in [p_rmin, p_lmax - 1] overflows neither side.
        cut = max(v - 1, p_rmin)
    elif v == p_lmax and p_lmax - 1 >= anchor:
        cut = p_lmax - 1
    else:
        cut = p_rmin
    return SplitPlan(cut, cut + 1, False, None, bounds, p_lmax, p_rmin, None)


def uniform_bound_cut(ranges: list[Range]) -> Optional[int]:
    """Follow-up cut for an overflowing split output.

    Such an output always shares one bound across all entries: a common left
    bound (cut just below the minimum right bound) or a common right bound
    (cut just below the maximum left bound). Either way one side collapses to
    a single entry under GC.
    """
    lefts = {r.left for r in ranges}
    rights = {r.right for r in ranges}
    if len(lefts) == 1:
        cut = min(rights)
        return cut if cut < max(rights) else None
    if len(rights) == 1:
        cut = max(lefts) - 1
        return cut if cut >= min(lefts) else None
    return None


def partition_entries(
    entries: list[tuple[Range, bytes]],
    cut: int,
    semantics,
    tombstone: bytes,
) -> tuple[list[tuple[Range, bytes]], list[tuple[Range, bytes]], int]:
    """Assign entries around the cut, dividing the ones that cross it.

    Divided values go through divide_value (left piece first so chained
    indicator offsets compose against the still-registered original, which is
    then reported dropped); tombstone pieces stay tombstones. Temporal order
    is preserved within each side. Returns (left, right, divided count).
    """
    left: list[tuple[Range, bytes]] = []
    right: list[tuple[Range, bytes]] = []
    divided = 0
    for r, v in entries:
        if r.right <= cut:
            left.append((r, v))
        elif r.left > cut:
            right.append((r, v))
        else:
            lpart = Range(r.left, cut)
            rpart = Range(cut + 1, r.right)
            if v == tombstone:
                lv = rv = tombstone
            else:
                lv = semantics.divide_value(r, v, lpart)
                rv = semantics.divide_value(r, v, rpart)
                semantics.on_entry_dropped(r, v)
            left.append((lpart, lv))
            right.append((rpart, rv))
            divided += 1
    return left, right, divided


class MergeOutcome(Enum):
    NONE = "none"
    MERGED = "merged"
    RESPLIT = "resplit"


def coalesce_pairs(
    left_entries: list[tuple[Range, bytes]],
    right_entries: list[tuple[Range, bytes]],
    semantics,
) -> tuple[list[tuple[Range, bytes]], int]:
    """Aggregate two leaves' entries, recombining fragments of one write.

    Pairs a right-leaf entry with the newest adjacent left-leaf entry the
    callback accepts; the merged entry takes the right entry's temporal slot.
    That placement is blockwise-safe only if no left entry newer than the
    paired one overlaps it, which is checked before the callback runs (the
    callback commits bookkeeping on success). Returns (merged array, pairs).
    """
    consumed = [False] * len(left_entries)
    out_right = list(right_entries)
    pairs = 0
    for k, (rb, vb) in enumerate(out_right):
        for j in range(len(left_entries) - 1, -1, -1):
            if consumed[j]:
                continue
            ra, va = left_entries[j]
            if ra.right + 1 != rb.left:
                continue
            safe = True
            for m in range(j + 1, len(left_entries)):
                if intersect(left_entries[m][0], ra) is not None:
                    safe = False
                    break
            if not safe:
                continue
            merged = semantics.merge_range(ra, va, rb, vb)
            if merged is not None:
                consumed[j] = True
                out_right[k] = merged
                pairs += 1
                break
    result = [e for e, used in zip(left_entries, consumed) if not used]
    result.extend(out_right)
    return result, pairs
