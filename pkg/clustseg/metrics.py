"""
Superpixel quality metrics
- ASA: achievable segmentation accuracy against a ground-truth label map
- CO:  area-weighted isoperimetric compactness, 4*pi*A / P^2 clamped at 1
"""

import numpy as np
import pandas as pd

from clustseg.exceptions import ShapeError


def _as_labels(labels, name):
    labels = np.asarray(labels)
    if labels.ndim != 2 or labels.size == 0:
        raise ShapeError(f"{name} must be a non-empty H x W label map", labels.shape)
    return labels.astype(np.int64)


def asa(labels, gt):
    """
    Fraction of pixels a labeling can get right if every superpixel takes the
    ground-truth segment it overlaps most
    """
    labels = _as_labels(labels, "labels")
    gt = _as_labels(gt, "ground truth")
    if labels.shape != gt.shape:
        raise ShapeError("label map and ground truth differ in size", labels.shape, gt.shape)
    overlap = pd.crosstab(labels.ravel(), gt.ravel())
    return float(overlap.max(axis=1).sum() / labels.size)


def perimeters(labels):
    """
    Boundary-edge count of every label present, as {label: edges}

    An edge counts when the 4-neighbor across it has another label or lies
    outside the image.
    """
    labels = _as_labels(labels, "labels")
    present, inverse = np.unique(labels.ravel(), return_inverse=True)
    inverse = inverse.reshape(labels.shape)
    sizes = np.bincount(inverse.ravel(), minlength=len(present))
    same_h = inverse[:, 1:] == inverse[:, :-1]
    same_v = inverse[1:, :] == inverse[:-1, :]
    internal = np.bincount(inverse[:, 1:][same_h], minlength=len(present))
    internal += np.bincount(inverse[1:, :][same_v], minlength=len(present))
    edges = 4 * sizes - 2 * internal
    return dict(zip(present.tolist(), edges.tolist()))


def compactness(labels):
    """Sum over superpixels of |S|/HW * min(1, 4*pi*|S| / P(S)^2)"""
    labels = _as_labels(labels, "labels")
    present, counts = np.unique(labels, return_counts=True)
    edges = perimeters(labels)
    per = np.array([edges[lab] for lab in present.tolist()], dtype=np.float64)
    area = counts.astype(np.float64)
    terms = np.minimum(1.0, 4.0 * np.pi * area / per**2)
    return float(np.sum(area / labels.size * terms))
