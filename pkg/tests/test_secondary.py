import pytest

from rask import Range
from rask.ranges import indicator
from rask.secondary import MissingSecondaryEntry, SecondaryTree, SecondaryTreeSemantics

W = 10
IND = indicator(W)


def sem():
    return SecondaryTreeSemantics(SecondaryTree(), payload_width=W)


def val(i):
    return i.to_bytes(W, "big")


class TestDivideValue:
    def test_first_fragment_keeps_value(self):
        s = sem()
        assert s.divide_value(Range(5, 30), val(1), Range(5, 19)) == val(1)
        assert len(s.tree) == 0

    def test_later_fragment_registers_offset(self):
        s = sem()
        out = s.divide_value(Range(5, 30), val(1), Range(20, 30))
        assert out == IND
        assert s.resolve(Range(20, 30), IND, Range(20, 30)) == (val(1), 15)

    def test_chained_division_composes_offsets(self):
        s = sem()
        frag = Range(20, 30)
        s.divide_value(Range(5, 30), val(1), frag)
        # Divide the indicator fragment again at 25.
        left = s.divide_value(frag, IND, Range(20, 24))
        right = s.divide_value(frag, IND, Range(25, 30))
        s.on_entry_dropped(frag, IND)
        assert left == IND and right == IND
        assert s.resolve(Range(20, 24), IND, Range(22, 23)) == (val(1), 17)
        assert s.resolve(Range(25, 30), IND, Range(25, 30)) == (val(1), 20)
        # Exactly the two live fragments remain registered.
        assert len(s.tree) == 2


class TestResolve:
    def test_plain_value_offsets_from_stored_range(self):
        s = sem()
        assert s.resolve(Range(7, 9), val(3), Range(7, 9)) == (val(3), 0)
        assert s.resolve(Range(7, 9), val(3), Range(8, 9)) == (val(3), 1)

    def test_indicator_composes_stored_offset(self):
        s = sem()
        s.divide_value(Range(5, 30), val(1), Range(20, 30))
        assert s.resolve(Range(20, 30), IND, Range(22, 25)) == (val(1), 17)

    def test_missing_entry_raises(self):
        s = sem()
        with pytest.raises(MissingSecondaryEntry):
            s.resolve(Range(20, 30), IND, Range(22, 25))


class TestMergeRange:
    def test_fragments_of_one_write_merge(self):
        s = sem()
        a, b = Range(6, 6), Range(7, 8)
        vb = s.divide_value(Range(6, 8), val(9), b)
        merged = s.merge_range(a, val(9), b, vb)
        assert merged == (Range(6, 8), val(9))
        assert len(s.tree) == 0

    def test_indicator_pair_rekeys_to_union(self):
        s = sem()
        orig = Range(0, 29)
        a, b = Range(10, 19), Range(20, 29)
        va = s.divide_value(orig, val(2), a)
        vb = s.divide_value(orig, val(2), b)
        merged = s.merge_range(a, va, b, vb)
        assert merged == (Range(10, 29), IND)
        assert s.resolve(Range(10, 29), IND, Range(15, 29)) == (val(2), 15)
        assert len(s.tree) == 1

    def test_adjacent_ranges_from_different_writes_decline(self):
        s = sem()
        vb = s.divide_value(Range(5, 8), val(4), Range(7, 8))
        assert s.merge_range(Range(5, 6), val(3), Range(7, 8), vb) is None

    def test_non_adjacent_fragments_decline(self):
        s = sem()
        vb = s.divide_value(Range(0, 20), val(4), Range(10, 20))
        assert s.merge_range(Range(0, 8), val(4), Range(10, 20), vb) is None


class TestRefcounting:
    def test_regenerated_fragment_key_survives_old_generation_drop(self):
        s = sem()
        # Two writes fragment at the same boundary producing the same key.
        s.divide_value(Range(0, 20), val(1), Range(10, 20))
        s.divide_value(Range(5, 20), val(2), Range(10, 20))
        # GC later drops the shadowed older fragment entry.
        s.on_entry_dropped(Range(10, 20), IND)
        # The newer generation still resolves, with the newest payload.
        assert s.resolve(Range(10, 20), IND, Range(10, 20)) == (val(2), 5)
        s.on_entry_dropped(Range(10, 20), IND)
        assert len(s.tree) == 0

    def test_release_of_unregistered_entry_raises(self):
        s = sem()
        with pytest.raises(MissingSecondaryEntry):
            s.tree.release(s.index_id, Range(3, 4))


class TestSharing:
    def test_indexes_share_one_tree_without_collisions(self):
        tree = SecondaryTree()
        s1 = SecondaryTreeSemantics(tree, payload_width=W)
        s2 = SecondaryTreeSemantics(tree, payload_width=W)
        assert s1.index_id != s2.index_id
        s1.divide_value(Range(0, 9), val(1), Range(5, 9))
        s2.divide_value(Range(0, 9), val(2), Range(5, 9))
        assert s1.resolve(Range(5, 9), IND, Range(5, 9)) == (val(1), 5)
        assert s2.resolve(Range(5, 9), IND, Range(5, 9)) == (val(2), 5)
        assert len(tree) == 2
