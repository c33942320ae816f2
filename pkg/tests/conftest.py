import random

import pytest
from hypothesis import strategies as st

from rask import Range

KEY_SPACE = 1 << 16


@st.composite
def ranges(draw, key_space=KEY_SPACE, max_length=256):
    left = draw(st.integers(min_value=0, max_value=key_space - 2))
    length = draw(st.integers(min_value=1, max_value=min(max_length, key_space - left)))
    return Range.make(left, length)


def random_range(rng: random.Random, key_space=KEY_SPACE, max_length=256) -> Range:
    left = rng.randrange(key_space - 1)
    length = rng.randint(1, min(max_length, key_space - left))
    return Range.make(left, length)


def value_for(i: int, width: int = 10) -> bytes:
    return i.to_bytes(width, "big")


@pytest.fixture
def rng():
    return random.Random(0xA5)
