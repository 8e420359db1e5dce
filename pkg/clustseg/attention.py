"""
Cross-attention as clustering

Centers (queries) are K x D; pixel features are a FeatureMap flattened to
HW x D. Projections multiply on the right: Q = C W_q, K = F W_k, V = F W_v.

Flop counts are multiply-adds of the matmuls actually executed (projections,
scores, aggregation, head merge, center norms). Softmax exponentials,
divisions and residual additions are not counted.
"""

from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from clustseg.config import (
    CENTER_MODES,
    FINEST_LEVELS_WITH_LAYERS,
    LAYERS_PER_LEVEL,
    SELF_ATTENTION_CHUNK,
    SIMILARITIES,
    T_ITERATIONS,
)
from clustseg.em import hard_assign
from clustseg.exceptions import ConfigurationError, ParseError, RangeError, ShapeError
from clustseg.ffn import FfnHead
from clustseg.linalg import FeatureMap, as_matrix, matmul, matmul_flops, softmax_axis
from clustseg.logs import elapsed, get_logger
from clustseg.weights import read_matrices, write_matrices

log = get_logger("ATTN")


# =============================================================================
# PARAMETERS AND TRACES
# =============================================================================

@dataclass(frozen=True)
class AttentionParams:
    """
    Projections of one attention layer, shared by all T iterations

    mlp is the decoder's post-attention feed-forward block; None means the
    block contributes nothing.
    """
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    heads: int = 1
    head_merge: np.ndarray = None
    mlp: FfnHead = None

    def __post_init__(self):
        w_q = as_matrix(self.w_q, "w_q")
        d = w_q.shape[0]
        merge = np.eye(d) if self.head_merge is None else self.head_merge
        for name, value in (("w_q", w_q), ("w_k", self.w_k), ("w_v", self.w_v), ("head_merge", merge)):
            m = as_matrix(value, name)
            if m.shape != (d, d):
                raise ShapeError(f"{name} must be {d}x{d}", m.shape)
            if not np.all(np.isfinite(m)):
                raise ConfigurationError(f"{name} has non-finite entries")
            object.__setattr__(self, name, m)
        if self.heads < 1 or d % self.heads != 0:
            raise ConfigurationError(f"dim {d} is not divisible by heads={self.heads}")
        if self.mlp is not None and self.mlp.dim != d:
            raise ShapeError("MLP dimension does not match projections", (self.mlp.dim,), (d,))

    @property
    def dim(self):
        return self.w_q.shape[0]

    @classmethod
    def identity(cls, dim, mlp=None):
        eye = np.eye(dim)
        return cls(eye, eye.copy(), eye.copy(), mlp=mlp)

    @classmethod
    def zeros(cls, dim, with_mlp=True):
        z = np.zeros((dim, dim))
        return cls(z, z.copy(), z.copy(), mlp=FfnHead.zeros(dim) if with_mlp else None)

    @classmethod
    def random(cls, dim, rng, heads=1, with_mlp=True):
        """Seeded Gaussian projections, std 1/sqrt(D)"""
        scale = 1.0 / np.sqrt(dim)
        w_q, w_k, w_v = (rng.normal(0.0, scale, size=(dim, dim)) for _ in range(3))
        merge = rng.normal(0.0, scale, size=(dim, dim)) if heads > 1 else None
        mlp = FfnHead.random(dim, rng) if with_mlp else None
        return cls(w_q, w_k, w_v, heads=heads, head_merge=merge, mlp=mlp)


@dataclass
class LayerTrace:
    """Per-iteration soft assignments (deep-supervision outputs) of one layer"""
    assignments: list
    centers: np.ndarray
    flop_count: int = 0
    query_projections: int = 0
    key_projections: int = 0
    value_projections: int = 0
    level: int = None
    extra_params: int = 0


@dataclass
class DecoderConfig:
    """
    Layer layout of the hierarchical decoder

    layers_per_level maps pyramid level (0 = coarsest) to its layer count;
    the default puts LAYERS_PER_LEVEL layers on each of the three finest levels.
    """
    levels: int
    k: int
    t_iterations: int = T_ITERATIONS
    layers_per_level: dict = field(default=None)

    def __post_init__(self):
        if self.layers_per_level is None:
            first = max(0, self.levels - FINEST_LEVELS_WITH_LAYERS)
            self.layers_per_level = {
                level: (LAYERS_PER_LEVEL if level >= first else 0) for level in range(self.levels)
            }
        if self.t_iterations < 1:
            raise RangeError(f"t_iterations must be >= 1, got {self.t_iterations}")
        if self.total_layers < 1:
            raise ConfigurationError("decoder needs at least one layer")

    @property
    def total_layers(self):
        return sum(self.layers_per_level.values())

    def layer_levels(self):
        """Pyramid level of every layer, in execution order"""
        levels = []
        for level in range(self.levels):
            levels.extend([level] * self.layers_per_level.get(level, 0))
        return levels


# =============================================================================
# SHARED PIECES
# =============================================================================

class _Tally:
    """Per-invocation instrumentation; never shared between calls"""

    def __init__(self):
        self.flops = 0
        self.q = 0
        self.k = 0
        self.v = 0

    def matmul(self, a, b):
        self.flops += matmul_flops(a.shape, b.shape)
        return matmul(a, b)


def _pixels(i):
    if isinstance(i, FeatureMap):
        return i.flatten()
    return as_matrix(i, "pixel features")


def _check_inputs(c, f, p):
    c = as_matrix(c, "centers")
    if c.shape[1] != p.dim or f.shape[1] != p.dim:
        raise ShapeError("centers, pixels and projections disagree on D", c.shape, f.shape, p.w_q.shape)
    return c


def _check_options(similarity, update):
    if similarity not in SIMILARITIES:
        raise ConfigurationError(f"similarity must be one of {SIMILARITIES}, got {similarity!r}")
    if update not in CENTER_MODES:
        raise ConfigurationError(f"update must be one of {CENTER_MODES}, got {update!r}")


def _assign(q, keys, values, p, tally, normalize="cols", similarity="dot", update="paper_sum"):
    """
    One assignment + aggregation pass over all heads

    normalize: 'cols' softmax over K (clustering), 'rows' softmax over HW
    (vanilla attention), 'hard' one-hot argmax over K.

    Returns:
        (aggregated K x D matrix before merge, head-averaged assignment,
         per-row mass for weighted_mean, None otherwise)
    """
    d = p.dim
    dh = d // p.heads
    out = np.empty((q.shape[0], d))
    mean_assignment = None
    masses = None
    for h in range(p.heads):
        s = slice(h * dh, (h + 1) * dh)
        q_h, k_h, v_h = q[:, s], keys[:, s], values[:, s]
        scores = tally.matmul(q_h, k_h.T)
        if similarity == "neg_sq_dist":
            # q.k - |q|^2/2 == -|q - k|^2/2 up to a per-pixel constant
            scores = scores - 0.5 * np.sum(q_h * q_h, axis=1)[:, None]
            tally.flops += q_h.shape[0] * dh
        if normalize == "hard":
            m = hard_assign(scores)
        else:
            m = softmax_axis(scores, normalize)
        agg = tally.matmul(m, v_h)
        if update == "weighted_mean":
            head_mass = m.sum(axis=1)
            safe = np.where(head_mass > 0, head_mass, 1.0)
            agg = agg / safe[:, None]
            masses = head_mass if masses is None else np.minimum(masses, head_mass)
        out[:, s] = agg
        mean_assignment = m if mean_assignment is None else mean_assignment + m
    if p.heads > 1:
        mean_assignment = mean_assignment / p.heads
    return out, mean_assignment, masses


def _merge(out, p, tally):
    if p.heads > 1:
        return tally.matmul(out, p.head_merge)
    return out


def _single_pass(c, i, p, normalize):
    f = _pixels(i)
    c = _check_inputs(c, f, p)
    tally = _Tally()
    q = tally.matmul(c, p.w_q)
    keys = tally.matmul(f, p.w_k)
    values = tally.matmul(f, p.w_v)
    out, _, _ = _assign(q, keys, values, p, tally, normalize=normalize)
    return c + _merge(out, p, tally)


# =============================================================================
# ATTENTION VARIANTS
# =============================================================================

def vanilla_cross_attention(c, i, p):
    """C + softmax_HW(Q K^T) V"""
    return _single_pass(c, i, p, "rows")


def cluster_softmax_attention(c, i, p):
    """C + softmax_K(Q K^T) V"""
    return _single_pass(c, i, p, "cols")


def hard_assignment_attention(c, i, p):
    """C + onehot(argmax_K(Q K^T)) V; ties go to the lowest query index"""
    return _single_pass(c, i, p, "hard")


def recurrent_cross_attention(c0, i, p, t, similarity="dot", update="paper_sum", keep_all=True):
    """
    T alternations of assignment (E) and center update (M) with shared weights

    K and V are projected once; only Q is recomputed each iteration. No
    residual inside the loop: C(t+1) = M(t) V.

    Args:
        c0: K x D initial centers
        i: FeatureMap (or HW x D matrix) of pixel embeddings
        p: AttentionParams shared by all iterations
        t: Number of iterations (>= 1)
        similarity: 'dot' (plain dot product) or 'neg_sq_dist' (k-means style logits)
        update: 'paper_sum' (M V) or 'weighted_mean' (M V / mass)
        keep_all: Record every M(t); False keeps only the last one

    Returns:
        LayerTrace with the recorded M(t) and the final centers
    """
    if t < 1:
        raise RangeError(f"recurrent cross-attention needs t >= 1, got {t}")
    _check_options(similarity, update)
    f = _pixels(i)
    c = _check_inputs(c0, f, p).copy()

    tally = _Tally()
    keys = tally.matmul(f, p.w_k)
    tally.k += 1
    values = tally.matmul(f, p.w_v)
    tally.v += 1

    assignments = []
    for _ in range(t):
        q = tally.matmul(c, p.w_q)
        tally.q += 1
        out, m, masses = _assign(q, keys, values, p, tally, similarity=similarity, update=update)
        new_c = _merge(out, p, tally)
        if masses is not None and np.any(masses == 0):
            # zero-mass clusters keep their center
            new_c[masses == 0] = c[masses == 0]
        c = new_c
        if not keep_all:
            assignments.clear()
        assignments.append(m)

    return LayerTrace(
        assignments=assignments,
        centers=c,
        flop_count=tally.flops,
        query_projections=tally.q,
        key_projections=tally.k,
        value_projections=tally.v,
    )


def stacked_cross_attention(c0, i, p, query_weights):
    """
    Non-recurrent baseline: len(query_weights) cluster-softmax steps, each
    with its own query projection; K and V from p are projected once.

    The extra learnable parameters over the recurrent layer are reported
    as (T - 1) * D^2.
    """
    t = len(query_weights)
    if t < 1:
        raise RangeError("stacked cross-attention needs at least one query projection")
    f = _pixels(i)
    c = _check_inputs(c0, f, p).copy()

    tally = _Tally()
    keys = tally.matmul(f, p.w_k)
    tally.k += 1
    values = tally.matmul(f, p.w_v)
    tally.v += 1

    assignments = []
    for w_q in query_weights:
        w_q = as_matrix(w_q, "stacked w_q")
        if w_q.shape != p.w_q.shape:
            raise ShapeError("stacked query projection has the wrong shape", w_q.shape, p.w_q.shape)
        q = tally.matmul(c, w_q)
        tally.q += 1
        out, m, _ = _assign(q, keys, values, p, tally)
        c = _merge(out, p, tally)
        assignments.append(m)

    return LayerTrace(
        assignments=assignments,
        centers=c,
        flop_count=tally.flops,
        query_projections=tally.q,
        key_projections=tally.k,
        value_projections=tally.v,
        extra_params=(t - 1) * p.dim * p.dim,
    )


def pixel_self_attention(i, p, chunk=SELF_ATTENTION_CHUNK):
    """
    Every pixel attends to every pixel: F + softmax_HW(Q K^T) V

    This is the O(H^2 W^2 D) reference the clustering layer is compared
    against. Query rows are processed in blocks so the HW x HW score matrix
    is never materialized at once.

    Returns:
        (HW x D output, multiply-add count)
    """
    f = _pixels(i)
    if f.shape[1] != p.dim:
        raise ShapeError("pixels and projections disagree on D", f.shape, p.w_q.shape)
    tally = _Tally()
    q = tally.matmul(f, p.w_q)
    keys = tally.matmul(f, p.w_k)
    values = tally.matmul(f, p.w_v)
    out = np.empty_like(f)
    for start in range(0, f.shape[0], chunk):
        rows = slice(start, min(start + chunk, f.shape[0]))
        block, _, _ = _assign(q[rows], keys, values, p, tally, normalize="rows")
        out[rows] = block
    return f + _merge(out, p, tally), tally.flops


# =============================================================================
# HIERARCHICAL DECODER
# =============================================================================

def decoder_stack(c0, pyramid, params, cfg):
    """
    Residual stack of recurrent cross-attention layers over a feature pyramid

    C <- C + RCA(C, I_level, p, T), then C <- C + MLP(C) when the layer has
    an MLP. Parameters are not shared between layers.

    Returns:
        (final centers, list of LayerTrace in execution order)
    """
    if len(pyramid) != cfg.levels:
        raise ConfigurationError(f"pyramid has {len(pyramid)} levels, config expects {cfg.levels}")
    layer_levels = cfg.layer_levels()
    if len(params) != len(layer_levels):
        raise ConfigurationError(f"got {len(params)} parameter sets for {len(layer_levels)} layers")
    c = as_matrix(c0, "initial centers").copy()
    if c.shape[0] != cfg.k:
        raise ShapeError(f"decoder expects {cfg.k} queries", c.shape)

    traces = []
    for index, (level, p) in enumerate(zip(layer_levels, params)):
        start = datetime.now()
        trace = recurrent_cross_attention(c, pyramid[level], p, cfg.t_iterations)
        trace.level = level
        c = c + trace.centers
        if p.mlp is not None:
            c = c + p.mlp(c)
            trace.flop_count += p.mlp.flops(c.shape[0])
        traces.append(trace)
        log.debug(f"layer {index} (level {level}, T={cfg.t_iterations}) done in {elapsed(start):.3f}s")
    return c, traces


# =============================================================================
# WEIGHT BUNDLES
# =============================================================================

_PARAMS_PER_LAYER = 9


def save_params(path, params):
    """Write a list of AttentionParams as a CSW1 bundle (layout in weights.py)"""
    matrices = []
    for p in params:
        matrices.extend([np.array([[p.heads]], dtype=np.float64), p.w_q, p.w_k, p.w_v, p.head_merge])
        if p.mlp is None:
            matrices.extend([np.zeros((0, 0))] * 4)
        else:
            matrices.extend(p.mlp.matrices())
    write_matrices(path, matrices)


def load_params(path):
    matrices = read_matrices(path)
    if len(matrices) % _PARAMS_PER_LAYER != 0:
        raise ParseError(f"{path}: {len(matrices)} matrices is not a whole number of layers")
    params = []
    for start in range(0, len(matrices), _PARAMS_PER_LAYER):
        heads, w_q, w_k, w_v, merge, w1, b1, w2, b2 = matrices[start:start + _PARAMS_PER_LAYER]
        mlp = None if w1.size == 0 else FfnHead.from_matrices(w1, b1, w2, b2)
        params.append(AttentionParams(w_q, w_k, w_v, heads=int(heads[0, 0]), head_merge=merge, mlp=mlp))
    return params
