"""Range-as-a-key in-memory ordered index with log-structured leaves."""

from .ranges import (
    ADDRESS_MAX,
    DEFAULT_PAYLOAD_WIDTH,
    InvalidValue,
    Range,
    ValueSemantics,
    covers,
    indicator,
    intersect,
    subtract,
    tombstone,
)
from .secondary import MissingSecondaryEntry, SecondaryTree, SecondaryTreeSemantics
from .oracle import FlatRangeMap
from .tree import Hit, RaskConfig, RaskIndex

__all__ = [
    "ADDRESS_MAX",
    "DEFAULT_PAYLOAD_WIDTH",
    "FlatRangeMap",
    "Hit",
    "InvalidValue",
    "MissingSecondaryEntry",
    "Range",
    "RaskConfig",
    "RaskIndex",
    "SecondaryTree",
    "SecondaryTreeSemantics",
    "ValueSemantics",
    "covers",
    "indicator",
    "intersect",
    "subtract",
    "tombstone",
]
