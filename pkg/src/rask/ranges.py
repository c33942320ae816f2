"""Closed integer block ranges, the opaque value model, and user value callbacks.

A range is a closed interval [left, right] of 64-bit block addresses; the
public constructor takes (left, length) so there is never an off-by-one
question about which bound is inclusive. Values are opaque fixed-width byte
payloads with two reserved bit patterns: a tombstone (logical delete) and an
indicator (the true value lives in an auxiliary map, see rask.secondary).
"""

from __future__ import annotations

from typing import NamedTuple, Optional

ADDRESS_MAX = 2**64 - 1
LENGTH_MAX = 2**32 - 1

DEFAULT_PAYLOAD_WIDTH = 10


class Range(NamedTuple):
    """Closed block interval. Construct via Range.make(left, length)."""

    left: int
    right: int

    @classmethod
    def make(cls, left: int, length: int) -> "Range":
        if length < 1 or length > LENGTH_MAX:
            raise ValueError(f"range length must be in [1, {LENGTH_MAX}], got {length}")
        if left < 0 or left + length - 1 > ADDRESS_MAX:
            raise ValueError(f"range [{left}, {left + length - 1}] outside address space")
        return cls(left, left + length - 1)

    @property
    def length(self) -> int:
        return self.right - self.left + 1

    def __str__(self) -> str:
        return f"[{self.left},{self.right}]"


def is_valid(r: Range) -> bool:
    return 0 <= r.left <= r.right <= ADDRESS_MAX


def intersect(a: Range, b: Range) -> Optional[Range]:
    """Overlap of a and b, or None when disjoint."""
    lo = a.left if a.left > b.left else b.left
    hi = a.right if a.right < b.right else b.right
    if lo > hi:
        return None
    return Range(lo, hi)


def covers(outer: Range, inner: Range) -> bool:
    """True iff every block of inner lies inside outer."""
    return outer.left <= inner.left and inner.right <= outer.right


def subtract(target: Range, hole: Range) -> list[Range]:
    """target minus hole as 0..2 maximal disjoint ranges, ordered by left bound."""
    out = []
    if target.left < hole.left:
        out.append(Range(target.left, min(target.right, hole.left - 1)))
    if target.right > hole.right:
        out.append(Range(max(target.left, hole.right + 1), target.right))
    return out


def indicator(width: int = DEFAULT_PAYLOAD_WIDTH) -> bytes:
    """Reserved all-ones payload marking an indirected fragment value."""
    return b"\xff" * width


def tombstone(width: int = DEFAULT_PAYLOAD_WIDTH) -> bytes:
    """Reserved all-ones-minus-one payload marking a logical delete."""
    return b"\xff" * (width - 1) + b"\xfe"


class InvalidValue(ValueError):
    """Raised when a user payload has the wrong width or is a reserved sentinel."""


def check_payload(value: bytes, width: int) -> None:
    if not isinstance(value, bytes) or len(value) != width:
        raise InvalidValue(f"payload must be {width} bytes, got {value!r}")
    if value == indicator(width) or value == tombstone(width):
        raise InvalidValue("payload collides with a reserved sentinel")


class ValueSemantics:
    """User callbacks telling the index how values divide and recombine.

    divide_value is the write-side callback: it is only invoked with sub fully
    contained in original, never with a tombstone, and may mutate auxiliary
    state (the default implementation registers fragments in a secondary map).
    resolve is the read-side variant: pure, returns the value for sub plus the
    block offset of sub.left from the start of the originating write.
    merge_range may only report ranges mergeable when they are adjacent in key
    space and the values are continuous; if a merged payload cannot be
    represented the callback must decline by returning None.
    """

    def divide_value(self, original: Range, value: bytes, sub: Range) -> bytes:
        return value

    def resolve(self, stored: Range, value: bytes, sub: Range) -> tuple[bytes, int]:
        return value, sub.left - stored.left

    def merge_range(
        self, a: Range, value_a: bytes, b: Range, value_b: bytes
    ) -> Optional[tuple[Range, bytes]]:
        return None

    def on_entry_dropped(self, stored: Range, value: bytes) -> None:
        """Hook fired when a stored entry is physically discarded."""
