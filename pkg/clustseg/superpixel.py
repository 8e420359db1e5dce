"""
Superpixel segmentation with the recurrent clustering core

Pixels become 5-channel vectors [Lab color, scaled x/y position]; grid seeds
are refined by recurrent cross-attention with identity projections, hardened
with argmax and cleaned up so that every label is one 4-connected region.
"""

from dataclasses import dataclass
from datetime import datetime

import numpy as np
from scipy import ndimage

from clustseg.attention import AttentionParams, recurrent_cross_attention
from clustseg.color import rgb_to_lab
from clustseg.config import (
    CENTER_MODES,
    COLOR_WEIGHT,
    MIN_REGION_FRAC,
    POSITION_WEIGHT,
    SIMILARITIES,
    STANDALONE_MODE,
    T_ITERATIONS,
)
from clustseg.dreamy_start import superpixel_init
from clustseg.em import hard_assign
from clustseg.exceptions import ConfigurationError, RangeError, ShapeError
from clustseg.ffn import FfnHead
from clustseg.linalg import FeatureMap, grid_shape
from clustseg.logs import elapsed, get_logger

log = get_logger("SUPERPIXEL")

FEATURE_DIM = 5
FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


# =============================================================================
# CONFIG
# =============================================================================

@dataclass(frozen=True)
class SuperpixelConfig:
    """
    Settings of one superpixel run

    position_weight is the compactness knob: larger values give more regular
    cells. similarity/update default to nearest-center logits with
    mass-normalized centers; update='paper_sum' runs the raw M V form.
    """
    k_requested: int
    t_iterations: int = T_ITERATIONS
    color_weight: float = COLOR_WEIGHT
    position_weight: float = POSITION_WEIGHT
    min_region_frac: float = MIN_REGION_FRAC
    use_ffn: bool = False
    similarity: str = "neg_sq_dist"
    update: str = STANDALONE_MODE

    def __post_init__(self):
        if self.k_requested < 1:
            raise RangeError(f"k_requested must be >= 1, got {self.k_requested}")
        if self.t_iterations < 1:
            raise RangeError(f"t_iterations must be >= 1, got {self.t_iterations}")
        if self.color_weight < 0 or self.position_weight < 0:
            raise RangeError("color and position weights must be non-negative")
        if self.color_weight == 0 and self.position_weight == 0:
            raise ConfigurationError("color_weight and position_weight cannot both be zero")
        if not 0 <= self.min_region_frac <= 1:
            raise RangeError(f"min_region_frac must be in [0, 1], got {self.min_region_frac}")
        if self.similarity not in SIMILARITIES:
            raise ConfigurationError(f"similarity must be one of {SIMILARITIES}, got {self.similarity!r}")
        if self.update not in CENTER_MODES:
            raise ConfigurationError(f"update must be one of {CENTER_MODES}, got {self.update!r}")

    def k_actual(self, height, width):
        rows, cols = grid_shape(height, width, self.k_requested)
        return rows * cols


# =============================================================================
# FEATURES
# =============================================================================

def grid_interval(height, width, k_actual):
    """S = sqrt(HW / k_actual), the mean seed spacing in pixels"""
    return float(np.sqrt(height * width / k_actual))


def build_pixel_features(lab, cfg, k_actual=None):
    """
    [cw*L, cw*a, cw*b, pw*x/S, pw*y/S] per pixel

    Args:
        lab: 3-channel Lab FeatureMap
        cfg: SuperpixelConfig
        k_actual: Seed count used for S; derived from cfg when omitted
    """
    if lab.dim != 3:
        raise ShapeError("expected a 3-channel Lab map", lab.data.shape)
    h, w = lab.height, lab.width
    if k_actual is None:
        k_actual = cfg.k_actual(h, w)
    s = grid_interval(h, w, k_actual)
    feats = np.empty((h, w, FEATURE_DIM), dtype=np.float64)
    feats[..., :3] = cfg.color_weight * lab.data
    feats[..., 3] = (cfg.position_weight / s) * np.arange(w, dtype=np.float64)[None, :]
    feats[..., 4] = (cfg.position_weight / s) * np.arange(h, dtype=np.float64)[:, None]
    return FeatureMap(feats)


# =============================================================================
# PIPELINE
# =============================================================================

def segment_superpixels(img, cfg, ffn=None):
    """
    Segment an RGB image into superpixels

    Args:
        img: H x W x 3 uint8 array
        cfg: SuperpixelConfig
        ffn: Seed FFN; defaults to the exact identity FFN when cfg.use_ffn

    Returns:
        (H x W int64 label map, {"k_requested", "k_actual", "iters", "flops"})
    """
    start = datetime.now()
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ShapeError("expected an H x W x 3 image", img.shape)
    h, w = img.shape[:2]
    k_actual = cfg.k_actual(h, w)

    feats = build_pixel_features(rgb_to_lab(img), cfg, k_actual)
    if cfg.use_ffn and ffn is None:
        ffn = FfnHead.identity(FEATURE_DIM)
    seed_ffn = ffn if cfg.use_ffn else None
    centers, _, k_actual = superpixel_init(feats, cfg.k_requested, seed_ffn, embed_positions=False)

    trace = recurrent_cross_attention(
        centers,
        feats,
        AttentionParams.identity(FEATURE_DIM),
        cfg.t_iterations,
        similarity=cfg.similarity,
        update=cfg.update,
        keep_all=False,
    )
    labels = hard_assign(trace.assignments[-1]).argmax(axis=0).reshape(h, w)
    labels = enforce_connectivity(labels, cfg.min_region_frac, k_actual)

    flops = trace.flop_count + (seed_ffn.flops(k_actual) if seed_ffn is not None else 0)
    log.debug(f"{h}x{w}, k={k_actual}, T={cfg.t_iterations} segmented in {elapsed(start):.3f}s")
    return labels, {
        "k_requested": cfg.k_requested,
        "k_actual": int(k_actual),
        "iters": cfg.t_iterations,
        "flops": int(flops),
    }


def seed_voronoi(height, width, coords):
    """
    Nearest-seed labeling in pixel space; ties go to the lowest seed index

    Args:
        coords: (k, 2) array of (row, col) seeds
    """
    coords = np.asarray(coords, dtype=np.float64)
    yy, xx = np.mgrid[0:height, 0:width]
    labels = np.zeros(height * width, dtype=np.int64)
    best = np.full(height * width, np.inf)
    ys = yy.ravel().astype(np.float64)
    xs = xx.ravel().astype(np.float64)
    for index, (row, col) in enumerate(coords):
        d = (ys - row) ** 2 + (xs - col) ** 2
        closer = d < best
        labels[closer] = index
        best[closer] = d[closer]
    return labels.reshape(height, width)


# =============================================================================
# CONNECTIVITY
# =============================================================================

def _components(labels):
    """4-connected components of every label: (component map, owner label, sizes)"""
    comp = np.empty(labels.shape, dtype=np.int64)
    owners = []
    sizes = []
    for lab in np.unique(labels):
        cc, n = ndimage.label(labels == lab, structure=FOUR_CONNECTED)
        mask = cc > 0
        comp[mask] = cc[mask] - 1 + len(owners)
        sizes.extend(np.bincount(cc[mask], minlength=n + 1)[1:].tolist())
        owners.extend([int(lab)] * n)
    return comp, owners, sizes


def _adjacency(comp, count):
    pairs = [
        np.stack([comp[:, 1:].ravel(), comp[:, :-1].ravel()], axis=1),
        np.stack([comp[1:, :].ravel(), comp[:-1, :].ravel()], axis=1),
    ]
    pairs = np.concatenate(pairs)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]
    neighbors = [set() for _ in range(count)]
    for a, b in np.unique(np.sort(pairs, axis=1), axis=0):
        neighbors[a].add(int(b))
        neighbors[b].add(int(a))
    return neighbors


def enforce_connectivity(labels, min_region_frac=MIN_REGION_FRAC, k_actual=None):
    """
    Make every label a single 4-connected region

    Each label keeps its largest component when that component covers at
    least min_region_frac * HW / k_actual pixels. Every other component, in
    ascending size then raster order, is absorbed into the largest adjacent
    region (ties to the lowest component id). Labels are not renumbered.
    """
    labels = np.asarray(labels, dtype=np.int64)
    h, w = labels.shape
    if k_actual is None:
        k_actual = int(labels.max()) + 1
    min_size = min_region_frac * h * w / max(1, k_actual)

    comp, owners, sizes = _components(labels)
    count = len(owners)
    if count == len(set(owners)) and min(sizes) >= min_size:
        return labels.copy()

    keep = np.zeros(count, dtype=bool)
    best = {}
    for c in range(count):
        if owners[c] not in best or sizes[c] > sizes[best[owners[c]]]:
            best[owners[c]] = c
    for c in best.values():
        keep[c] = sizes[c] >= min_size
    if not keep.any():
        keep[int(np.argmax(sizes))] = True

    first_pixel = np.full(count, h * w, dtype=np.int64)
    np.minimum.at(first_pixel, comp.ravel(), np.arange(h * w))
    neighbors = _adjacency(comp, count)
    parent = list(range(count))
    size = list(sizes)

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    order = sorted((c for c in range(count) if not keep[c]), key=lambda c: (sizes[c], first_pixel[c]))
    for c in order:
        roots = {find(n) for n in neighbors[c]} - {c}
        target = min(roots, key=lambda r: (-size[r], r))
        parent[c] = target
        size[target] += size[c]
        neighbors[target] |= neighbors[c]

    root_label = np.array([owners[find(c)] for c in range(count)], dtype=np.int64)
    return root_label[comp]
