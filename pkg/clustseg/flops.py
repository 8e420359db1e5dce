"""
Closed-form multiply-add counts

Matches the loops in attention.py term for term:

    recurrent / stacked:  2*HW*D^2                      (K and V projections, once)
                        + T * (K*D^2                    (Q projection)
                               + 2*K*HW*D               (scores + aggregation)
                               + K*D^2   if heads > 1   (head merge)
                               + K*D     if distance)   (center norms)
    cross (one pass):     recurrent with T = 1
    vanilla:              3*HW*D^2 + 2*(HW)^2*D (+ HW*D^2 if heads > 1)

So recurrent cost is affine in T with slope 2*K*HW*D + K*D^2, and beats
pixel self-attention whenever T*K is well below HW.
"""

from clustseg.exceptions import ConfigurationError, RangeError

VARIANTS = ["vanilla", "recurrent", "stacked", "cross"]


def flop_count(h, w, k, d, t, variant, heads=1, distance=False):
    """Exact multiply-add count of one forward pass of `variant`"""
    if variant not in VARIANTS:
        raise ConfigurationError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if min(h, w, k, d, heads) < 1:
        raise RangeError("sizes must be positive")
    hw = h * w
    merge = d * d if heads > 1 else 0

    if variant == "vanilla":
        return 3 * hw * d * d + 2 * hw * hw * d + hw * merge

    if variant == "cross":
        t = 1
    if t < 1:
        raise RangeError(f"t must be >= 1, got {t}")
    per_iteration = k * d * d + 2 * k * hw * d + k * merge + (k * d if distance else 0)
    return 2 * hw * d * d + t * per_iteration


def recurrent_slope(h, w, k, d):
    """Extra multiply-adds per additional iteration (single head, dot similarity)"""
    return 2 * k * h * w * d + k * d * d
