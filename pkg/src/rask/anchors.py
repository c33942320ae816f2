"""Ordered anchor-key index: adaptive radix trie (default) and a bisect-based
sorted map behind the same contract.

Keys are 64-bit anchor keys stored big-endian so lexicographic trie order
equals numeric order. Contract: insert(key, leaf), remove(key), and
floor_lookup(key) returning the entry with the greatest key <= query.
Mutations are serialized by a mutex and bracketed by an even/odd version;
lookups are optimistic and retry on version change, so they may run
concurrently with publish/retire.
"""

from __future__ import annotations

import threading
from bisect import bisect_right, insort


def _common_prefix_len(a: bytes, b: bytes) -> int:
    n = min(len(a), len(b))
    for i in range(n):
        if a[i] != b[i]:
            return i
    return n


class _ArtLeaf:
    __slots__ = ("key", "value")

    def __init__(self, key: bytes, value):
        self.key = key
        self.value = value


class _SortedNode:
    """Small node: sorted key bytes with parallel children."""

    __slots__ = ("prefix", "keys", "children")
    MAX = 4

    def __init__(self, prefix: bytes):
        self.prefix = prefix
        self.keys: list[int] = []
        self.children: list = []

    @property
    def count(self) -> int:
        return len(self.keys)

    def find(self, b: int):
        keys = self.keys
        for i in range(len(keys)):
            k = keys[i]
            if k == b:
                return self.children[i]
            if k > b:
                return None
        return None

    def lower(self, b: int):
        best = None
        for i, k in enumerate(self.keys):
            if k >= b:
                break
            best = i
        return self.children[best] if best is not None else None

    def max_child(self):
        return self.children[-1]

    def replace(self, b: int, child) -> None:
        self.children[self.keys.index(b)] = child

    def add(self, b: int, child):
        """Insert child under byte b; returns self or a grown replacement."""
        if len(self.keys) >= self.MAX:
            grown = self._grow()
            grown.add(b, child)
            return grown
        i = 0
        while i < len(self.keys) and self.keys[i] < b:
            i += 1
        self.keys.insert(i, b)
        self.children.insert(i, child)
        return self

    def remove(self, b: int) -> None:
        i = self.keys.index(b)
        del self.keys[i]
        del self.children[i]

    def items(self):
        return zip(self.keys, self.children)

    def _grow(self):
        raise NotImplementedError


class _Node4(_SortedNode):
    __slots__ = ()
    MAX = 4

    def _grow(self):
        n = _Node16(self.prefix)
        n.keys = list(self.keys)
        n.children = list(self.children)
        return n


class _Node16(_SortedNode):
    __slots__ = ()
    MAX = 16

    def _grow(self):
        n = _Node48(self.prefix)
        for b, c in self.items():
            n.add(b, c)
        return n


class _Node48:
    """Byte-indexed slot table (0 = empty, else slot+1) over 48 child cells."""

    __slots__ = ("prefix", "index", "children", "count")
    MAX = 48

    def __init__(self, prefix: bytes):
        self.prefix = prefix
        self.index = bytearray(256)
        self.children: list = [None] * 48
        self.count = 0

    def find(self, b: int):
        s = self.index[b]
        return self.children[s - 1] if s else None

    def lower(self, b: int):
        for bb in range(b - 1, -1, -1):
            s = self.index[bb]
            if s:
                return self.children[s - 1]
        return None

    def max_child(self):
        for bb in range(255, -1, -1):
            s = self.index[bb]
            if s:
                return self.children[s - 1]
        return None

    def replace(self, b: int, child) -> None:
        self.children[self.index[b] - 1] = child

    def add(self, b: int, child):
        if self.count >= self.MAX:
            grown = _Node256(self.prefix)
            for bb, c in self.items():
                grown.add(bb, c)
            grown.add(b, child)
            return grown
        slot = self.children.index(None)
        self.children[slot] = child
        self.index[b] = slot + 1
        self.count += 1
        return self

    def remove(self, b: int) -> None:
        s = self.index[b]
        self.children[s - 1] = None
        self.index[b] = 0
        self.count -= 1

    def items(self):
        for bb in range(256):
            s = self.index[bb]
            if s:
                yield bb, self.children[s - 1]


class _Node256:
    __slots__ = ("prefix", "children", "count")

    def __init__(self, prefix: bytes):
        self.prefix = prefix
        self.children: list = [None] * 256
        self.count = 0

    def find(self, b: int):
        return self.children[b]

    def lower(self, b: int):
        for bb in range(b - 1, -1, -1):
            c = self.children[bb]
            if c is not None:
                return c
        return None

    def max_child(self):
        for bb in range(255, -1, -1):
            c = self.children[bb]
            if c is not None:
                return c
        return None

    def replace(self, b: int, child) -> None:
        self.children[b] = child

    def add(self, b: int, child):
        if self.children[b] is None:
            self.count += 1
        self.children[b] = child
        return self

    def remove(self, b: int) -> None:
        self.children[b] = None
        self.count -= 1

    def items(self):
        for bb in range(256):
            c = self.children[bb]
            if c is not None:
                yield bb, c


def _shrink(node):
    """Step a node down a size class when it underfills."""
    if isinstance(node, _Node256) and node.count <= 40:
        n = _Node48(node.prefix)
        for b, c in node.items():
            n.add(b, c)
        return n
    if isinstance(node, _Node48) and node.count <= 12:
        n = _Node16(node.prefix)
        for b, c in node.items():
            n.add(b, c)
        return n
    if isinstance(node, _Node16) and node.count <= 3:
        n = _Node4(node.prefix)
        n.keys = list(node.keys)
        n.children = list(node.children)
        return n
    return node


class _Retry:
    pass


_RETRY = _Retry()


class ArtAnchorMap:
    """Adaptive radix trie over big-endian 64-bit keys with path compression."""

    KEY_BYTES = 8

    def __init__(self):
        self._root = None
        self._mutex = threading.Lock()
        self._version = 0
        self._count = 0

    def __len__(self) -> int:
        return self._count

    # -- mutation ----------------------------------------------------------

    def insert(self, anchor: int, value) -> None:
        key = anchor.to_bytes(self.KEY_BYTES, "big")
        with self._mutex:
            self._version += 1
            try:
                self._root = self._insert(self._root, key, 0, value)
                self._count += 1
            finally:
                self._version += 1

    def remove(self, anchor: int) -> None:
        key = anchor.to_bytes(self.KEY_BYTES, "big")
        with self._mutex:
            self._version += 1
            try:
                self._root = self._remove(self._root, key, 0)
                self._count -= 1
            finally:
                self._version += 1

    def _insert(self, node, key: bytes, depth: int, value):
        if node is None:
            return _ArtLeaf(key, value)
        if isinstance(node, _ArtLeaf):
            if node.key == key:
                raise AssertionError(f"duplicate anchor insert: {int.from_bytes(key, 'big')}")
            p = _common_prefix_len(node.key[depth:], key[depth:])
            branch = _Node4(key[depth:depth + p])
            branch = branch.add(node.key[depth + p], node)
            branch = branch.add(key[depth + p], _ArtLeaf(key, value))
            return branch
        prefix = node.prefix
        pl = len(prefix)
        seg = key[depth:depth + pl]
        if seg == prefix:
            b = key[depth + pl]
            child = node.find(b)
            if child is None:
                return node.add(b, _ArtLeaf(key, value))
            node.replace(b, self._insert(child, key, depth + pl + 1, value))
            return node
        p = _common_prefix_len(seg, prefix)
        branch = _Node4(prefix[:p])
        old_byte = prefix[p]
        node.prefix = prefix[p + 1:]
        branch = branch.add(old_byte, node)
        branch = branch.add(key[depth + p], _ArtLeaf(key, value))
        return branch

    def _remove(self, node, key: bytes, depth: int):
        if node is None:
            raise KeyError(int.from_bytes(key, "big"))
        if isinstance(node, _ArtLeaf):
            if node.key != key:
                raise KeyError(int.from_bytes(key, "big"))
            return None
        pl = len(node.prefix)
        if key[depth:depth + pl] != node.prefix:
            raise KeyError(int.from_bytes(key, "big"))
        b = key[depth + pl]
        child = node.find(b)
        if child is None:
            raise KeyError(int.from_bytes(key, "big"))
        replacement = self._remove(child, key, depth + pl + 1)
        if replacement is not None:
            node.replace(b, replacement)
            return node
        node.remove(b)
        if node.count == 1:
            only_byte, only_child = next(iter(node.items()))
            if isinstance(only_child, _ArtLeaf):
                return only_child
            only_child.prefix = node.prefix + bytes([only_byte]) + only_child.prefix
            return only_child
        return _shrink(node)

    # -- lookup ------------------------------------------------------------

    def floor_lookup(self, anchor: int):
        key = anchor.to_bytes(self.KEY_BYTES, "big")
        while True:
            v = self._version
            if v & 1:
                continue
            try:
                leaf = self._floor(self._root, key, 0)
            except (AttributeError, IndexError, TypeError, KeyError):
                leaf = _RETRY
            if leaf is not _RETRY and self._version == v:
                return leaf.value if leaf is not None else None

    def _floor(self, node, key: bytes, depth: int):
        if node is None:
            return None
        if isinstance(node, _ArtLeaf):
            return node if node.key <= key else None
        prefix = node.prefix
        end = depth + len(prefix)
        seg = key[depth:end]
        if seg > prefix:
            return self._max_leaf(node)
        if seg < prefix:
            return None
        b = key[end]
        child = node.find(b)
        if child is not None:
            res = self._floor(child, key, end + 1)
            if res is not None:
                return res
        lo = node.lower(b)
        if lo is None:
            return None
        return self._max_leaf(lo)

    def _max_leaf(self, node):
        while not isinstance(node, _ArtLeaf):
            node = node.max_child()
        return node

    def keys(self) -> list[int]:
        out = []

        def walk(node):
            if node is None:
                return
            if isinstance(node, _ArtLeaf):
                out.append(int.from_bytes(node.key, "big"))
                return
            for _, c in node.items():
                walk(c)

        walk(self._root)
        return sorted(out)


class SortedAnchorMap:
    """bisect-backed ordered map; same contract, used as differential twin."""

    def __init__(self):
        self._keys: list[int] = []
        self._map: dict[int, object] = {}
        self._mutex = threading.Lock()
        self._version = 0

    def __len__(self) -> int:
        return len(self._keys)

    def insert(self, anchor: int, value) -> None:
        with self._mutex:
            self._version += 1
            try:
                if anchor in self._map:
                    raise AssertionError(f"duplicate anchor insert: {anchor}")
                insort(self._keys, anchor)
                self._map[anchor] = value
            finally:
                self._version += 1

    def remove(self, anchor: int) -> None:
        with self._mutex:
            self._version += 1
            try:
                del self._map[anchor]
                i = bisect_right(self._keys, anchor) - 1
                if i < 0 or self._keys[i] != anchor:
                    raise KeyError(anchor)
                del self._keys[i]
            finally:
                self._version += 1

    def floor_lookup(self, anchor: int):
        while True:
            v = self._version
            if v & 1:
                continue
            keys = self._keys
            try:
                i = bisect_right(keys, anchor) - 1
                value = self._map[keys[i]] if i >= 0 else None
            except (IndexError, KeyError):
                value = _RETRY
            if value is not _RETRY and self._version == v:
                return value

    def keys(self) -> list[int]:
        return list(self._keys)


def make_anchor_map(kind: str):
    if kind == "art":
        return ArtAnchorMap()
    if kind == "sorted":
        return SortedAnchorMap()
    raise ValueError(f"unknown anchor index kind: {kind}")
