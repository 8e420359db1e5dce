"""
Dense matrix substrate

Matrices are 2-D float64 numpy arrays, row-major. Feature maps are H x W x D
grids of pixel embeddings; pixel index p = y * W + x when flattened.
"""

from dataclasses import dataclass

import numpy as np

from clustseg.config import GRID_FLOOR_EPS, PE_BASE, SOFTMAX_SUM_TOL, check_invariants
from clustseg.exceptions import (
    ConfigurationError,
    EmptyPoolError,
    InvariantViolation,
    RangeError,
    ShapeError,
)

AXES = {"rows": 1, "cols": 0}


def as_matrix(a, name="matrix"):
    """Coerce to a 2-D float64 array or raise ShapeError"""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{name} must be 2-D", m.shape)
    return m


def _check_finite(m, what):
    if check_invariants() and not np.all(np.isfinite(m)):
        raise InvariantViolation(f"{what} produced non-finite entries")


# =============================================================================
# FEATURE MAPS
# =============================================================================

@dataclass(frozen=True)
class FeatureMap:
    """H x W x D pixel embeddings"""
    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=np.float64, copy=True)
        if data.ndim != 3:
            raise ShapeError("feature map must be H x W x D", data.shape)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def dim(self):
        return self.data.shape[2]

    @property
    def num_pixels(self):
        return self.height * self.width

    def flatten(self):
        """(H*W) x D matrix, pixel-major"""
        return self.data.reshape(self.num_pixels, self.dim)

    @classmethod
    def from_matrix(cls, m, height, width):
        m = as_matrix(m)
        if m.shape[0] != height * width:
            raise ShapeError(f"cannot fold into {height}x{width} map", m.shape)
        return cls(m.reshape(height, width, m.shape[1]))


# =============================================================================
# CORE OPS
# =============================================================================

def matmul(a, b):
    """Matrix product with an explicit shape check"""
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError("matmul dimension mismatch", a.shape, b.shape)
    out = a @ b
    _check_finite(out, "matmul")
    return out


def matmul_flops(a_shape, b_shape):
    """Multiply-adds performed by matmul on these shapes"""
    return int(a_shape[0]) * int(a_shape[1]) * int(b_shape[1])


def softmax_axis(m, axis):
    """
    Softmax where every slice along `axis` sums to one

    axis="cols" normalizes each column (softmax over the row index, e.g. the
    K axis of a K x N score matrix); axis="rows" normalizes each row.
    """
    if axis not in AXES:
        raise ConfigurationError(f"axis must be 'rows' or 'cols', got {axis!r}")
    m = as_matrix(m)
    np_axis = AXES[axis]
    shifted = m - m.max(axis=np_axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=np_axis, keepdims=True)
    if check_invariants():
        sums = out.sum(axis=np_axis)
        if sums.size and np.max(np.abs(sums - 1.0)) > SOFTMAX_SUM_TOL:
            raise InvariantViolation(
                f"softmax slices sum off by {np.max(np.abs(sums - 1.0)):.3e}"
            )
    return out


def avg_pool(vectors):
    """Coordinate-wise mean of a non-empty list of equal-length vectors"""
    if len(vectors) == 0:
        raise EmptyPoolError("cannot average an empty list of vectors")
    stacked = np.asarray(vectors, dtype=np.float64)
    if stacked.ndim != 2:
        raise ShapeError("pooled vectors must share one dimension", stacked.shape)
    return stacked.mean(axis=0)


def relu(m):
    return np.maximum(m, 0.0)


# =============================================================================
# POSITION EMBEDDING
# =============================================================================

def _sinusoid_half(positions, channels):
    # channel c: sin (even c) or cos (odd c) of pos / base^(2*(c//2)/channels)
    idx = np.arange(channels)
    freq = 1.0 / np.power(PE_BASE, 2.0 * (idx // 2) / channels)
    angles = positions[:, None] * freq[None, :]
    return np.where(idx % 2 == 0, np.sin(angles), np.cos(angles))


def sinusoid_table(height, width, dim):
    """
    Additive 2-D sinusoidal embedding, H x W x dim

    First dim/2 channels encode the column (x), last dim/2 the row (y).
    """
    if dim % 2 != 0:
        raise ConfigurationError(f"position embedding needs an even dim, got {dim}")
    half = dim // 2
    x_part = _sinusoid_half(np.arange(width, dtype=np.float64), half)
    y_part = _sinusoid_half(np.arange(height, dtype=np.float64), half)
    table = np.empty((height, width, dim), dtype=np.float64)
    table[:, :, :half] = x_part[None, :, :]
    table[:, :, half:] = y_part[:, None, :]
    return table


def position_embed(fm):
    return FeatureMap(fm.data + sinusoid_table(fm.height, fm.width, fm.dim))


# =============================================================================
# GRID SAMPLING
# =============================================================================

def grid_shape(height, width, k_requested):
    """
    Rows and columns of the seed grid for k_requested seeds

    f = sqrt(k / (H*W)); the grid is floor(H*f) x floor(W*f), each side at
    least one. When a side is clamped up to one, the other side is capped so
    the product never exceeds k_requested.
    """
    num_pixels = height * width
    if not 1 <= k_requested <= num_pixels:
        raise RangeError(f"k_requested must be in [1, {num_pixels}], got {k_requested}")
    f = np.sqrt(k_requested / num_pixels)
    rows = int(np.floor(height * f + GRID_FLOOR_EPS))
    cols = int(np.floor(width * f + GRID_FLOOR_EPS))
    if rows < 1:
        rows = 1
        cols = min(width, max(1, k_requested))
    if cols < 1:
        cols = 1
        rows = min(height, max(1, k_requested))
    return rows, cols


def grid_coordinates(height, width, k_requested):
    """(k_actual, 2) int array of (row, col) cell-center seeds, row-major"""
    rows, cols = grid_shape(height, width, k_requested)
    ys = np.floor((np.arange(rows) + 0.5) * height / rows).astype(np.int64)
    xs = np.floor((np.arange(cols) + 0.5) * width / cols).astype(np.int64)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return np.stack([yy.ravel(), xx.ravel()], axis=1)


def grid_sample(fm, k_requested):
    """
    Sample feature vectors at a uniform grid of cell centers

    Returns:
        (k_actual x dim matrix, (k_actual, 2) row/col coordinates)
    """
    coords = grid_coordinates(fm.height, fm.width, k_requested)
    feats = fm.data[coords[:, 0], coords[:, 1], :]
    return np.array(feats, dtype=np.float64), coords
