"""
SLIC baseline

Grid seeds, a 2S x 2S local nearest-center search with the SLIC distance
D = dc^2 + (ds / S)^2 * m^2 and mean recomputation, then the same
connectivity cleanup the attention pipeline uses. Seeds and the initial
labeling (seed Voronoi) are shared with the attention pipeline so the two
are compared from the same start.
"""

from datetime import datetime

import numpy as np

from clustseg.color import rgb_to_lab
from clustseg.config import MIN_REGION_FRAC, SLIC_COMPACTNESS, SLIC_ITERATIONS
from clustseg.exceptions import RangeError, ShapeError
from clustseg.linalg import grid_coordinates
from clustseg.logs import elapsed, get_logger
from clustseg.superpixel import enforce_connectivity, grid_interval, seed_voronoi

log = get_logger("SLIC")


def _recompute_centers(labels, lab, centers):
    k = centers.shape[0]
    h, w = labels.shape
    flat = labels.ravel()
    counts = np.bincount(flat, minlength=k).astype(np.float64)
    yy, xx = np.mgrid[0:h, 0:w]
    channels = [lab[..., 0], lab[..., 1], lab[..., 2], yy, xx]
    sums = np.stack([np.bincount(flat, weights=ch.ravel(), minlength=k) for ch in channels], axis=1)
    updated = centers.copy()
    filled = counts > 0
    updated[filled] = sums[filled] / counts[filled, None]
    return updated


def slic_baseline(img, k_requested, compactness_knob=SLIC_COMPACTNESS, iters=SLIC_ITERATIONS,
                  min_region_frac=MIN_REGION_FRAC):
    """
    Classic SLIC superpixels

    Args:
        img: H x W x 3 uint8 array
        k_requested: Approximate superpixel count (grid-clamped like the pipeline)
        compactness_knob: m in the SLIC distance; larger gives squarer cells
        iters: Assignment/update rounds; 0 returns the seed Voronoi labeling
        min_region_frac: Connectivity threshold as a fraction of the mean area

    Returns:
        H x W int64 label map
    """
    start = datetime.now()
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeError("expected an H x W x 3 image", img.shape)
    if iters < 0:
        raise RangeError(f"iters must be >= 0, got {iters}")
    if compactness_knob < 0:
        raise RangeError(f"compactness must be >= 0, got {compactness_knob}")
    h, w = img.shape[:2]
    lab = rgb_to_lab(img).data
    coords = grid_coordinates(h, w, k_requested)
    k_actual = coords.shape[0]
    s = grid_interval(h, w, k_actual)
    reach = int(np.ceil(s))

    # centers: L, a, b, row, col
    centers = np.concatenate([lab[coords[:, 0], coords[:, 1], :], coords.astype(np.float64)], axis=1)
    labels = seed_voronoi(h, w, coords)

    spatial_scale = (compactness_knob / s) ** 2
    for _ in range(iters):
        best = np.full((h, w), np.inf)
        for index, center in enumerate(centers):
            cy, cx = center[3], center[4]
            y0, y1 = max(0, int(cy) - reach), min(h, int(cy) + reach + 1)
            x0, x1 = max(0, int(cx) - reach), min(w, int(cx) + reach + 1)
            if y0 >= y1 or x0 >= x1:
                continue
            window = lab[y0:y1, x0:x1, :]
            dc = np.sum((window - center[:3]) ** 2, axis=2)
            ys = np.arange(y0, y1, dtype=np.float64)[:, None] - cy
            xs = np.arange(x0, x1, dtype=np.float64)[None, :] - cx
            d = dc + (ys**2 + xs**2) * spatial_scale
            region = best[y0:y1, x0:x1]
            closer = d < region
            region[closer] = d[closer]
            labels[y0:y1, x0:x1][closer] = index
        centers = _recompute_centers(labels, lab, centers)

    labels = enforce_connectivity(labels, min_region_frac, k_actual)
    log.debug(f"{h}x{w}, k={k_actual}, {iters} iterations done in {elapsed(start):.3f}s")
    return labels
