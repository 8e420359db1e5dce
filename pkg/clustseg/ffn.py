"""
Two-layer feed-forward head: relu(X W1 + b1) W2 + b2

Used row-wise by the Dreamy-Start initializers and as the per-layer MLP of
the decoder stack.
"""

from dataclasses import dataclass

import numpy as np

from clustseg.config import FFN_HIDDEN_FACTOR
from clustseg.exceptions import ConfigurationError, ShapeError
from clustseg.linalg import as_matrix, matmul, relu


@dataclass(frozen=True)
class FfnHead:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        w1 = as_matrix(self.w1, "w1")
        w2 = as_matrix(self.w2, "w2")
        b1 = np.asarray(self.b1, dtype=np.float64).reshape(-1)
        b2 = np.asarray(self.b2, dtype=np.float64).reshape(-1)
        if w1.shape[1] < 1:
            raise ConfigurationError("FFN hidden width must be >= 1")
        if w2.shape != (w1.shape[1], w1.shape[0]) or b1.shape[0] != w1.shape[1] or b2.shape[0] != w1.shape[0]:
            raise ShapeError("inconsistent FFN shapes", w1.shape, b1.shape, w2.shape, b2.shape)
        for name, value in (("w1", w1), ("b1", b1), ("w2", w2), ("b2", b2)):
            if not np.all(np.isfinite(value)):
                raise ConfigurationError(f"FFN {name} has non-finite entries")
            object.__setattr__(self, name, value)

    @property
    def dim(self):
        return self.w1.shape[0]

    @property
    def hidden(self):
        return self.w1.shape[1]

    def __call__(self, x):
        x = as_matrix(x, "FFN input")
        if x.shape[1] != self.dim:
            raise ShapeError("FFN input dimension mismatch", x.shape, self.w1.shape)
        return matmul(relu(matmul(x, self.w1) + self.b1), self.w2) + self.b2

    def flops(self, rows):
        return 2 * rows * self.dim * self.hidden

    @classmethod
    def identity(cls, dim):
        """Exact identity: relu(x) - relu(-x) == x"""
        eye = np.eye(dim)
        return cls(
            w1=np.hstack([eye, -eye]),
            b1=np.zeros(2 * dim),
            w2=np.vstack([eye, -eye]),
            b2=np.zeros(dim),
        )

    @classmethod
    def zeros(cls, dim, hidden=None):
        hidden = hidden or FFN_HIDDEN_FACTOR * dim
        return cls(np.zeros((dim, hidden)), np.zeros(hidden), np.zeros((hidden, dim)), np.zeros(dim))

    @classmethod
    def random(cls, dim, rng, hidden=None):
        """Gaussian weights with std 1/sqrt(fan_in), zero biases"""
        hidden = hidden or FFN_HIDDEN_FACTOR * dim
        return cls(
            w1=rng.normal(0.0, 1.0 / np.sqrt(dim), size=(dim, hidden)),
            b1=np.zeros(hidden),
            w2=rng.normal(0.0, 1.0 / np.sqrt(hidden), size=(hidden, dim)),
            b2=np.zeros(dim),
        )

    def matrices(self):
        return [self.w1, self.b1[None, :], self.w2, self.b2[None, :]]

    @classmethod
    def from_matrices(cls, w1, b1, w2, b2):
        return cls(w1, np.asarray(b1).reshape(-1), w2, np.asarray(b2).reshape(-1))
