import numpy as np
import pytest

from pssmp.rng import PATH, WPRIME, Stream, as_stream


def test_same_stream_same_draws():
    a = Stream(3, (1, 2)).generator().random(5)
    b = Stream(3, (1, 2)).generator().random(5)
    assert np.array_equal(a, b)


def test_substreams_differ():
    s = Stream(3, (0,))
    a = s.substream(PATH).generator().random(5)
    b = s.substream(WPRIME).generator().random(5)
    c = Stream(4, (0,)).substream(PATH).generator().random(5)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_substream_appends_key():
    assert Stream(1, (2,)).substream(3, 4) == Stream(1, (2, 3, 4))


def test_as_stream():
    assert as_stream(5) == Stream(5)
    s = Stream(5, (1,))
    assert as_stream(s) is s
    with pytest.raises(TypeError):
        as_stream("5")
    with pytest.raises(ValueError):
        Stream(-1)
