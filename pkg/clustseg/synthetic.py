"""
Procedural test images with exact ground truth

Every generator returns (H x W x 3 uint8 image, H x W int64 ground truth).
"""

import numpy as np

from clustseg.superpixel import seed_voronoi

QUADRANT_COLORS = [
    (220, 40, 40),
    (40, 180, 60),
    (40, 70, 220),
    (240, 220, 60),
]


def quadrant_image(height=64, width=64, colors=QUADRANT_COLORS):
    """Four flat quadrants; ground truth 0 1 / 2 3 in raster order"""
    gt = np.zeros((height, width), dtype=np.int64)
    gt[:, width // 2:] += 1
    gt[height // 2:, :] += 2
    palette = np.array(colors, dtype=np.uint8)
    return palette[gt], gt


def constant_image(height=64, width=64, color=(128, 128, 128)):
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[...] = np.array(color, dtype=np.uint8)
    return img, np.zeros((height, width), dtype=np.int64)


def procedural_image(seed, height=128, width=128, regions=8, noise=6.0, texture=10.0):
    """
    Random Voronoi regions in distinct colors with stripes and pixel noise

    Args:
        seed: Seed for numpy's default_rng
        regions: Number of ground-truth regions
        noise: Std of the per-pixel Gaussian noise (8-bit units)
        texture: Amplitude of the per-region stripe pattern
    """
    rng = np.random.default_rng(seed)
    coords = np.stack([rng.integers(0, height, regions), rng.integers(0, width, regions)], axis=1)
    gt = seed_voronoi(height, width, coords)
    # keep only labels that won at least one pixel, renumbered densely
    _, gt = np.unique(gt, return_inverse=True)
    gt = gt.reshape(height, width)
    present = int(gt.max()) + 1

    palette = rng.uniform(30, 225, size=(present, 3))
    angles = rng.uniform(0, np.pi, size=present)
    periods = rng.uniform(4, 12, size=present)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    phase = (np.cos(angles)[gt] * xx + np.sin(angles)[gt] * yy) * 2 * np.pi / periods[gt]

    img = palette[gt] + texture * np.sin(phase)[..., None]
    img += rng.normal(0.0, noise, size=img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), gt


def texture_set(count=5, height=128, width=128, base_seed=0):
    """A fixed list of (name, image, ground truth) procedural images"""
    return [
        (f"texture_{i}",) + procedural_image(base_seed + i, height, width, regions=6 + i)
        for i in range(count)
    ]
