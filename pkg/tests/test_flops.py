import pytest

from clustseg.exceptions import ConfigurationError, RangeError
from clustseg.flops import flop_count, recurrent_slope


def test_recurrent_grows_strictly_with_t():
    counts = [flop_count(32, 32, 16, 64, t, "recurrent") for t in range(1, 7)]
    assert all(a < b for a, b in zip(counts, counts[1:]))


def test_recurrent_is_affine_in_t():
    counts = [flop_count(16, 24, 8, 32, t, "recurrent") for t in (1, 2, 3)]
    assert counts[1] - counts[0] == counts[2] - counts[1] == recurrent_slope(16, 24, 8, 32)


def test_vanilla_to_recurrent_ratio():
    hw, k, t = 4096, 32, 3
    ratio = flop_count(64, 64, k, 64, 1, "vanilla") / flop_count(64, 64, k, 64, t, "recurrent")
    expected = hw / (t * k)
    assert 0.5 * expected <= ratio <= 1.5 * expected


def test_closed_forms():
    h, w, k, d = 4, 5, 3, 6
    hw = h * w
    assert flop_count(h, w, k, d, 2, "recurrent") == 2 * hw * d * d + 2 * (k * d * d + 2 * k * hw * d)
    assert flop_count(h, w, k, d, 1, "recurrent", heads=2, distance=True) == (
        2 * hw * d * d + k * d * d + 2 * k * hw * d + k * d * d + k * d
    )
    assert flop_count(h, w, k, d, 9, "vanilla") == 3 * hw * d * d + 2 * hw * hw * d
    assert flop_count(h, w, k, d, 9, "cross") == flop_count(h, w, k, d, 1, "recurrent")
    assert flop_count(h, w, k, d, 3, "stacked") == flop_count(h, w, k, d, 3, "recurrent")


def test_bad_arguments():
    with pytest.raises(ConfigurationError):
        flop_count(4, 4, 2, 2, 1, "linear")
    with pytest.raises(RangeError):
        flop_count(4, 4, 2, 2, 0, "recurrent")
    with pytest.raises(RangeError):
        flop_count(0, 4, 2, 2, 1, "vanilla")
