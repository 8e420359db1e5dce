import numpy as np
import pytest

from clustseg.exceptions import (
    ConfigurationError,
    EmptyPoolError,
    InvariantViolation,
    RangeError,
    ShapeError,
)
from clustseg.linalg import (
    FeatureMap,
    avg_pool,
    grid_coordinates,
    grid_sample,
    grid_shape,
    matmul,
    matmul_flops,
    position_embed,
    relu,
    sinusoid_table,
    softmax_axis,
)


def test_matmul_scalar():
    assert matmul([[2.0]], [[3.0]]).tolist() == [[6.0]]


def test_matmul_shape_mismatch():
    with pytest.raises(ShapeError):
        matmul(np.ones((2, 3)), np.ones((2, 3)))


def test_matmul_non_finite_is_flagged_in_test_mode():
    with np.errstate(over="ignore"):
        with pytest.raises(InvariantViolation):
            matmul([[1e308]], [[10.0]])


def test_matmul_flops():
    assert matmul_flops((4, 3), (3, 5)) == 60


@pytest.mark.parametrize("axis,np_axis", [("cols", 0), ("rows", 1)])
def test_softmax_slices_sum_to_one(rng, axis, np_axis):
    m = softmax_axis(rng.normal(0, 5, size=(4, 7)), axis)
    assert np.allclose(m.sum(axis=np_axis), 1.0, atol=1e-12)
    assert np.all(m > 0)


def test_softmax_is_stable_for_large_logits():
    m = softmax_axis([[1000.0, 1001.0]], "rows")
    assert np.all(np.isfinite(m))
    assert m[0, 1] > m[0, 0]


def test_softmax_rejects_unknown_axis():
    with pytest.raises(ConfigurationError):
        softmax_axis(np.ones((2, 2)), "diag")


def test_avg_pool():
    assert avg_pool([[1.0, 2.0], [3.0, 6.0]]).tolist() == [2.0, 4.0]
    with pytest.raises(EmptyPoolError):
        avg_pool([])


def test_relu():
    assert relu(np.array([[-1.0, 0.0, 2.0]])).tolist() == [[0.0, 0.0, 2.0]]


def test_feature_map_is_read_only():
    fm = FeatureMap(np.zeros((2, 3, 4)))
    assert (fm.height, fm.width, fm.dim, fm.num_pixels) == (2, 3, 4, 6)
    with pytest.raises(ValueError):
        fm.data[0, 0, 0] = 1.0
    with pytest.raises(ShapeError):
        FeatureMap(np.zeros((2, 3)))


def test_feature_map_flatten_is_row_major():
    data = np.arange(2 * 3 * 1, dtype=np.float64).reshape(2, 3, 1)
    flat = FeatureMap(data).flatten()
    # pixel p = y * W + x
    assert flat[1 * 3 + 2, 0] == data[1, 2, 0]
    assert np.array_equal(FeatureMap.from_matrix(flat, 2, 3).data, data)


def test_sinusoid_origin():
    table = sinusoid_table(3, 4, 8)
    assert np.allclose(table[0, 0], [0, 1, 0, 1, 0, 1, 0, 1])


def test_sinusoid_halves_depend_on_one_axis():
    table = sinusoid_table(5, 6, 6)
    assert np.array_equal(table[0, :, :3], table[4, :, :3])
    assert np.array_equal(table[:, 0, 3:], table[:, 5, 3:])


def test_sinusoid_frequencies():
    table = sinusoid_table(1, 3, 8)
    # x-half has 4 channels; channel 2 uses frequency 1 / 10000^(2/4)
    assert np.isclose(table[0, 2, 2], np.sin(2 / 100.0))
    assert np.isclose(table[0, 2, 3], np.cos(2 / 100.0))


def test_sinusoid_needs_even_dim():
    with pytest.raises(ConfigurationError):
        sinusoid_table(2, 2, 5)


def test_position_embed_adds_table():
    fm = FeatureMap(np.ones((2, 2, 4)))
    assert np.allclose(position_embed(fm).data, 1.0 + sinusoid_table(2, 2, 4))


@pytest.mark.parametrize(
    "h,w,k,expected",
    [
        (60, 60, 16, (4, 4)),
        (64, 64, 4, (2, 2)),
        (64, 64, 1, (1, 1)),
        (64, 64, 10, (3, 3)),
        (1, 100, 10, (1, 10)),
        (100, 1, 7, (7, 1)),
    ],
)
def test_grid_shape(h, w, k, expected):
    assert grid_shape(h, w, k) == expected


@pytest.mark.parametrize("k", [0, 3601])
def test_grid_shape_range(k):
    with pytest.raises(RangeError):
        grid_shape(60, 60, k)


def test_grid_coordinates_are_cell_centers():
    coords = grid_coordinates(60, 60, 16)
    assert coords.shape == (16, 2)
    assert sorted(set(coords[:, 0].tolist())) == [7, 22, 37, 52]
    # row-major
    assert coords[:4].tolist() == [[7, 7], [7, 22], [7, 37], [7, 52]]


def test_grid_sample_picks_pixels(rng):
    fm = FeatureMap(rng.normal(size=(10, 12, 3)))
    seeds, coords = grid_sample(fm, 6)
    assert seeds.shape == (coords.shape[0], 3)
    for row, (y, x) in zip(seeds, coords):
        assert np.array_equal(row, fm.data[y, x])
