"""
Reverse-mode gradients of the recurrent cross-attention layer

Forward (heads == 1, dot similarity, paper_sum update):
    K = F W_k, V = F W_v
    Q_t = C_t W_q, S_t = Q_t K^T, M_t = softmax_K(S_t), C_{t+1} = M_t V
Given G = dL/dC_T, the pass below walks the iterations backwards.
"""

from dataclasses import dataclass

import numpy as np

from clustseg.exceptions import ConfigurationError, RangeError, ShapeError
from clustseg.linalg import FeatureMap, as_matrix, softmax_axis


@dataclass
class RcaGradients:
    c0: np.ndarray
    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    features: np.ndarray


def rca_forward(c0, f, w_q, w_k, w_v, t):
    """Plain forward pass keeping every intermediate needed by the backward pass"""
    keys = f @ w_k
    values = f @ w_v
    cs, qs, ms = [c0], [], []
    c = c0
    for _ in range(t):
        q = c @ w_q
        m = softmax_axis(q @ keys.T, "cols")
        c = m @ values
        qs.append(q)
        ms.append(m)
        cs.append(c)
    return keys, values, cs, qs, ms


def rca_gradient(c0, i, p, t, upstream):
    """
    Gradients of <upstream, C_T> w.r.t. c0, W_q, W_k, W_v and the pixels

    Args:
        c0: K x D initial centers
        i: FeatureMap or HW x D pixel matrix
        p: AttentionParams (heads must be 1)
        t: Iterations (>= 1)
        upstream: K x D gradient w.r.t. the final centers

    Returns:
        RcaGradients; `features` has the same shape as `i`
    """
    if t < 1:
        raise RangeError(f"t must be >= 1, got {t}")
    if p.heads != 1:
        raise ConfigurationError("rca_gradient supports single-head layers only")
    f = i.flatten() if isinstance(i, FeatureMap) else as_matrix(i, "pixel features")
    c0 = as_matrix(c0, "centers")
    g = as_matrix(upstream, "upstream gradient")
    if c0.shape[1] != p.dim or f.shape[1] != p.dim:
        raise ShapeError("centers, pixels and projections disagree on D", c0.shape, f.shape, p.w_q.shape)
    if g.shape != c0.shape:
        raise ShapeError("upstream gradient must match centers", g.shape, c0.shape)

    keys, values, cs, qs, ms = rca_forward(c0, f, p.w_q, p.w_k, p.w_v, t)

    d_wq = np.zeros_like(p.w_q)
    d_keys = np.zeros_like(keys)
    d_values = np.zeros_like(values)
    for step in reversed(range(t)):
        m, q, c_in = ms[step], qs[step], cs[step]
        d_m = g @ values.T
        d_values += m.T @ g
        # softmax over K, column by column
        d_s = m * (d_m - np.sum(m * d_m, axis=0, keepdims=True))
        d_q = d_s @ keys
        d_keys += d_s.T @ q
        d_wq += c_in.T @ d_q
        g = d_q @ p.w_q.T

    d_wk = f.T @ d_keys
    d_wv = f.T @ d_values
    d_f = d_keys @ p.w_k.T + d_values @ p.w_v.T
    if isinstance(i, FeatureMap):
        d_f = d_f.reshape(i.height, i.width, i.dim)
    return RcaGradients(c0=g, w_q=d_wq, w_k=d_wk, w_v=d_wv, features=d_f)
