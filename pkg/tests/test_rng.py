import numpy as np
import pytest
from hypothesis import given, strategies as st

from fedldpc import rng


def test_same_key_same_draws():
    a = rng.stream(5, rng.CHANNEL, 3, 1).random(10)
    b = rng.stream(5, rng.CHANNEL, 3, 1).random(10)
    assert np.array_equal(a, b)


@given(st.integers(0, 2**63), st.lists(st.integers(0, 1000), max_size=4))
def test_purpose_tags_separate_streams(seed, keys):
    a = rng.stream(seed, rng.CHANNEL, *keys).random(4)
    b = rng.stream(seed, rng.BIT_FLIP, *keys).random(4)
    assert not np.array_equal(a, b)


def test_creation_order_is_irrelevant():
    first = [rng.stream(1, rng.MINIBATCH, k).integers(0, 1 << 30, 3) for k in range(4)]
    second = [rng.stream(1, rng.MINIBATCH, k).integers(0, 1 << 30, 3) for k in reversed(range(4))]
    assert all(np.array_equal(x, y) for x, y in zip(first, reversed(second)))


def test_negative_keys_rejected():
    with pytest.raises(ValueError):
        rng.stream(-1)
    with pytest.raises(ValueError):
        rng.stream(0, -2)
