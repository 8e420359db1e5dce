"""
Color helpers
- sRGB (8-bit) -> CIE-Lab under D65 for superpixel features
- Hex color parsing for overlay boundaries
"""

import numpy as np

from clustseg.exceptions import ConfigurationError
from clustseg.linalg import FeatureMap

# sRGB -> XYZ (D65), http://www.brucelindbloom.com/index.html?Eqn_RGB_XYZ_Matrix.html
SRGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
D65_WHITE = np.array([0.95047, 1.00000, 1.08883])

_EPSILON = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0


def hex_to_rgb(hex_color):
    """Convert hex color to RGB tuple"""
    value = hex_color.lstrip('#')
    if len(value) != 6:
        raise ConfigurationError(f"expected #RRGGBB, got {hex_color!r}")
    try:
        return tuple(int(value[i:i+2], 16) for i in (0, 2, 4))
    except ValueError:
        raise ConfigurationError(f"expected #RRGGBB, got {hex_color!r}")


def srgb_to_linear(c):
    """Undo the sRGB transfer curve; c in [0, 1]"""
    c = np.asarray(c, dtype=np.float64)
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _lab_f(t):
    return np.where(t > _EPSILON, np.cbrt(t), (_KAPPA * t + 16.0) / 116.0)


def rgb_to_lab(img):
    """
    H x W x 3 uint8 sRGB image -> 3-channel Lab FeatureMap

    L in [0, 100]; white maps to (100, 0, 0) and black to (0, 0, 0).
    """
    rgb = np.asarray(img, dtype=np.float64) / 255.0
    linear = srgb_to_linear(rgb)
    xyz = linear @ SRGB_TO_XYZ.T
    f = _lab_f(xyz / D65_WHITE)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return FeatureMap(lab)
