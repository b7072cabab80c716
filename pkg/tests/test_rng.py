import numpy as np
import pytest
from hypothesis import given, strategies as st

from maxstable.rng import RngSpec, as_generator


def test_same_key_same_stream():
    a = RngSpec(7, 3).generator(5).random(8)
    b = RngSpec(7, 3).generator(5).random(8)
    assert np.array_equal(a, b)


def test_streams_and_blocks_differ():
    base = RngSpec(7).generator().random(4)
    assert not np.array_equal(base, RngSpec(7, 1).generator().random(4))
    assert not np.array_equal(base, RngSpec(7).generator(1).random(4))
    assert not np.array_equal(base, RngSpec(8).generator().random(4))


def test_child_keeps_seed():
    c = RngSpec(11, 2).child(9)
    assert c == RngSpec(11, 9)
    assert c.to_dict() == {"seed": 11, "stream": 9}


@pytest.mark.parametrize("bad", [-1, 2**64, 1.5, "3"])
def test_rejects_bad_seed(bad):
    with pytest.raises(ValueError):
        RngSpec(bad)


def test_as_generator_passthrough(gen):
    assert as_generator(gen) is gen
    with pytest.raises(TypeError):
        as_generator(42)


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**32))
def test_any_u64_seed_works(seed, stream):
    u = RngSpec(seed, stream).generator().random()
    assert 0.0 <= u < 1.0
