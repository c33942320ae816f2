import random

from rask import Range
from rask.concurrency import NullLock
from rask.leaf import (
    Leaf,
    NonOverlapList,
    UnfoundList,
    ablation_search,
    append,
    lightweight_gc,
    normal_gc,
    two_stage_gc,
)
from rask.ranges import tombstone

W = 10
TOMB = tombstone(W)


def v(i):
    return i.to_bytes(W, "big")


def make_leaf(entries, capacity=16):
    leaf = Leaf(0, capacity, NullLock())
    for i, item in enumerate(entries):
        if isinstance(item, Range):
            append(leaf, item, v(i))
        else:
            append(leaf, item[0], item[1])
    return leaf


def surviving(leaf):
    return leaf.entries()


def covered_by_newer_survivors(leaf):
    """Independent blockwise checker: any survivor fully overwritten by newer
    survivors?"""
    entries = leaf.entries()
    for i, (r, _) in enumerate(entries):
        newer = set()
        for rj, _ in entries[i + 1:]:
            newer.update(range(rj.left, rj.right + 1))
        if all(b in newer for b in range(r.left, r.right + 1)):
            return True
    return False


class TestLightweightGC:
    def test_same_left_bound_coverage(self):
        leaf = make_leaf([Range(2, 5), Range(2, 9)])
        assert lightweight_gc(leaf) == 1
        assert [r for r, _ in surviving(leaf)] == [Range(2, 9)]

    def test_distinct_left_bounds_untouched(self):
        leaf = make_leaf([Range(1, 10), Range(2, 11), Range(3, 12)])
        assert lightweight_gc(leaf) == 0

    def test_newer_shorter_range_does_not_cover_older(self):
        # Reverse scan records 7 for left bound 4 first; [4,9] then exceeds it.
        leaf = make_leaf([Range(4, 9), Range(4, 7)])
        assert lightweight_gc(leaf) == 0
        assert [r for r, _ in surviving(leaf)] == [Range(4, 9), Range(4, 7)]

    def test_identical_duplicates_keep_newest(self):
        leaf = make_leaf([Range(5, 9), Range(5, 9)])
        assert lightweight_gc(leaf) == 1
        assert surviving(leaf) == [(Range(5, 9), v(1))]

    def test_version_even_after_gc(self):
        leaf = make_leaf([Range(2, 5), Range(2, 9)])
        lightweight_gc(leaf)
        assert leaf.header.v_gc % 2 == 0
        assert leaf.header.v_gc != 0


class TestNormalGC:
    def test_union_coverage_from_figure_walk(self):
        # Reverse processing order [4,7], [4,9], [9,10], [5,7]: the union
        # grows to [4,10] and only [5,7] is covered.
        leaf = make_leaf([Range(5, 7), Range(9, 10), Range(4, 9), Range(4, 7)])
        reclaimed, union = normal_gc(leaf, TOMB)
        assert reclaimed == 1
        assert [r for r, _ in surviving(leaf)] == [Range(9, 10), Range(4, 9), Range(4, 7)]
        assert union.entries() == [Range(4, 10)]

    def test_joint_coverage_by_three_ranges(self):
        leaf = make_leaf([Range(1, 6), Range(1, 2), Range(3, 4), Range(5, 6)])
        reclaimed, _ = normal_gc(leaf, TOMB)
        assert reclaimed == 1
        assert [r for r, _ in surviving(leaf)] == [Range(1, 2), Range(3, 4), Range(5, 6)]

    def test_disjoint_leaf_untouched(self):
        entries = [Range(10, 11), Range(0, 1), Range(20, 25)]
        leaf = make_leaf(entries)
        reclaimed, union = normal_gc(leaf, TOMB)
        assert reclaimed == 0
        assert union.entries() == sorted(entries, key=lambda r: r.left)

    def test_order_preserved_after_compaction(self):
        leaf = make_leaf([Range(5, 7), Range(30, 31), Range(9, 10), Range(4, 9), Range(4, 7)])
        normal_gc(leaf, TOMB)
        assert [r for r, _ in surviving(leaf)] == [
            Range(30, 31), Range(9, 10), Range(4, 9), Range(4, 7)
        ]

    def test_extra_deleted_list_erases_like_newest_tombstones(self):
        leaf = make_leaf([Range(0, 9), Range(20, 29)])
        reclaimed, _ = normal_gc(leaf, TOMB, deleted_list=[Range(0, 15)])
        assert reclaimed == 1
        assert [r for r, _ in surviving(leaf)] == [Range(20, 29)]


class TestTombstoneGC:
    def test_tombstone_erases_then_both_reclaimed(self):
        leaf = make_leaf([(Range(1, 10), v(1)), (Range(1, 10), TOMB)])
        reclaimed, _ = normal_gc(leaf, TOMB)
        assert reclaimed == 2
        assert surviving(leaf) == []

    def test_partial_tombstone_keeps_data_and_tombstone(self):
        leaf = make_leaf([(Range(1, 10), v(1)), (Range(4, 6), TOMB)])
        reclaimed, _ = normal_gc(leaf, TOMB)
        assert reclaimed == 0
        hits, unfound, _ = ablation_search(leaf, UnfoundList([Range(1, 10)]))
        found = sorted(
            (h.sub for h in hits if h.value != TOMB), key=lambda r: r.left
        )
        assert found == [Range(1, 3), Range(7, 10)]

    def test_write_after_delete_survives_gc(self):
        # The rewrite is newer than the tombstone; GC must not lose it.
        leaf = make_leaf([(Range(5, 10), TOMB), (Range(5, 10), v(2))])
        reclaimed, _ = normal_gc(leaf, TOMB)
        assert reclaimed == 1
        assert surviving(leaf) == [(Range(5, 10), v(2))]

    def test_unneeded_tombstone_dropped(self):
        leaf = make_leaf([(Range(50, 60), TOMB)])
        reclaimed, _ = normal_gc(leaf, TOMB)
        assert reclaimed == 1
        assert surviving(leaf) == []


class TestTwoStageGC:
    def test_normal_skipped_when_lightweight_frees(self):
        leaf = make_leaf([Range(2, 5), Range(2, 9), Range(1, 20)])
        freed, union, lightweight_effective = two_stage_gc(leaf, TOMB)
        assert freed == 1 and lightweight_effective
        assert union is None
        # [2,9] is covered by [1,20] but only the normal stage would see that.
        assert [r for r, _ in surviving(leaf)] == [Range(2, 9), Range(1, 20)]

    def test_normal_stage_runs_when_lightweight_cannot(self):
        leaf = make_leaf([Range(5, 7), Range(9, 10), Range(4, 9), Range(4, 7)])
        freed, union, lightweight_effective = two_stage_gc(leaf, TOMB)
        assert freed == 1 and not lightweight_effective
        assert union is not None

    def test_disjoint_leaf_reclaims_nothing(self):
        leaf = make_leaf([Range(0, 1), Range(10, 11)])
        freed, union, lightweight_effective = two_stage_gc(leaf, TOMB)
        assert freed == 0 and not lightweight_effective
        assert union is not None


def random_leaf(rng, allow_tombstones=True):
    n = rng.randint(1, 16)
    entries = []
    for i in range(n):
        left = rng.randrange(120)
        r = Range(left, left + rng.randint(0, 30))
        if allow_tombstones and rng.random() < 0.2:
            entries.append((r, TOMB))
        else:
            entries.append((r, v(i)))
    return entries


class TestGCProperties:
    def test_lightweight_removals_subset_of_normal(self, rng):
        for _ in range(500):
            entries = random_leaf(rng)
            a = make_leaf(entries)
            b = make_leaf(entries)
            lightweight_gc(a)
            normal_gc(b, TOMB)
            kept_light = {id_ for id_, _ in enumerate(a.entries())}
            # Compare by surviving multiset: normal survivors must be a subset
            # of lightweight survivors (normal removes at least as much).
            light_surv = a.entries()
            norm_surv = b.entries()
            i = 0
            for e in norm_surv:
                while i < len(light_surv) and light_surv[i] != e:
                    i += 1
                assert i < len(light_surv), (entries, light_surv, norm_surv)
                i += 1

    def test_normal_gc_completeness(self, rng):
        for _ in range(500):
            leaf = make_leaf(random_leaf(rng))
            normal_gc(leaf, TOMB)
            assert not covered_by_newer_survivors(leaf)

    def test_search_results_unchanged_by_gc(self, rng):
        for _ in range(300):
            entries = random_leaf(rng)
            before = make_leaf(entries)
            after = make_leaf(entries)
            normal_gc(after, TOMB)
            target = Range(0, 160)

            def view(leaf):
                hits, _, _ = ablation_search(leaf, UnfoundList([target]))
                out = {}
                for h in hits:
                    for b in range(h.sub.left, h.sub.right + 1):
                        out[b] = None if h.value == TOMB else h.value
                return {b: val for b, val in out.items() if val is not None}

            assert view(before) == view(after)

    def test_append_only_between_gcs(self):
        leaf = make_leaf([Range(1, 5)])
        snapshot = leaf.entries()
        append(leaf, Range(9, 12), v(7))
        assert leaf.entries()[: len(snapshot)] == snapshot


class TestNonOverlapList:
    def test_adjacent_folds_coalesce(self):
        u = NonOverlapList()
        for r in (Range(1, 2), Range(5, 6), Range(3, 4)):
            u.fold(r)
        assert u.entries() == [Range(1, 6)]

    def test_covers_and_remaining(self):
        u = NonOverlapList()
        u.fold(Range(0, 4))
        u.fold(Range(10, 14))
        assert u.covers(Range(1, 3))
        assert not u.covers(Range(3, 11))
        assert u.remaining_after(Range(2, 12)) == [Range(5, 9)]
