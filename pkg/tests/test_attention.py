import numpy as np
import pytest

from clustseg.attention import (
    AttentionParams,
    DecoderConfig,
    cluster_softmax_attention,
    decoder_stack,
    hard_assignment_attention,
    load_params,
    pixel_self_attention,
    recurrent_cross_attention,
    save_params,
    stacked_cross_attention,
    vanilla_cross_attention,
)
from clustseg.em import e_step, em_cluster, m_step
from clustseg.exceptions import ConfigurationError, RangeError, ShapeError
from clustseg.ffn import FfnHead
from clustseg.flops import flop_count
from clustseg.linalg import FeatureMap, softmax_axis


def _inputs(rng, h=3, w=4, k=3, d=4, scale=0.5):
    pixels = FeatureMap(rng.normal(0, scale, size=(h, w, d)))
    c0 = rng.normal(0, scale, size=(k, d))
    return pixels, c0


@pytest.mark.parametrize("seed", range(50))
def test_identity_projections_reproduce_em(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 17))
    d = int(rng.integers(1, 5))
    k = int(rng.integers(1, 5))
    t = int(rng.integers(1, 5))
    x = rng.normal(size=(n, d))
    c0 = rng.normal(size=(k, d))
    trace = recurrent_cross_attention(c0, x, AttentionParams.identity(d), t)
    reference = em_cluster(x, k, c0, t_max=t, tol=-1.0, mode="paper_sum")
    assert reference.iterations_run == t
    assert np.max(np.abs(trace.centers - reference.centers)) < 1e-10


@pytest.mark.parametrize("t", range(1, 7))
def test_keys_and_values_projected_once(rng, t):
    pixels, c0 = _inputs(rng)
    trace = recurrent_cross_attention(c0, pixels, AttentionParams.random(4, rng), t)
    assert trace.key_projections == 1
    assert trace.value_projections == 1
    assert trace.query_projections == t
    assert len(trace.assignments) == t


def test_every_assignment_is_a_column_softmax(rng):
    pixels, c0 = _inputs(rng)
    trace = recurrent_cross_attention(c0, pixels, AttentionParams.random(4, rng, heads=2), 3)
    for m in trace.assignments:
        assert m.shape == (3, 12)
        assert np.allclose(m.sum(axis=0), 1.0, atol=1e-12)


def test_keep_all_false_keeps_last_assignment(rng):
    pixels, c0 = _inputs(rng)
    p = AttentionParams.random(4, rng)
    full = recurrent_cross_attention(c0, pixels, p, 3)
    last = recurrent_cross_attention(c0, pixels, p, 3, keep_all=False)
    assert len(last.assignments) == 1
    assert np.array_equal(last.assignments[0], full.assignments[-1])
    assert np.array_equal(last.centers, full.centers)


@pytest.mark.parametrize(
    "heads,similarity",
    [(1, "dot"), (2, "dot"), (1, "neg_sq_dist"), (4, "neg_sq_dist")],
)
def test_counted_flops_match_closed_form(rng, heads, similarity):
    pixels, c0 = _inputs(rng, h=5, w=6, k=3, d=8)
    p = AttentionParams.random(8, rng, heads=heads)
    for t in (1, 2, 3):
        trace = recurrent_cross_attention(c0, pixels, p, t, similarity=similarity)
        expected = flop_count(5, 6, 3, 8, t, "recurrent", heads=heads, distance=similarity == "neg_sq_dist")
        assert trace.flop_count == expected


def test_t_must_be_positive(rng):
    pixels, c0 = _inputs(rng)
    with pytest.raises(RangeError):
        recurrent_cross_attention(c0, pixels, AttentionParams.identity(4), 0)


def test_unknown_options(rng):
    pixels, c0 = _inputs(rng)
    p = AttentionParams.identity(4)
    with pytest.raises(ConfigurationError):
        recurrent_cross_attention(c0, pixels, p, 1, similarity="cosine")
    with pytest.raises(ConfigurationError):
        recurrent_cross_attention(c0, pixels, p, 1, update="median")


def test_dimension_mismatch(rng):
    pixels, _ = _inputs(rng)
    with pytest.raises(ShapeError):
        recurrent_cross_attention(np.zeros((2, 3)), pixels, AttentionParams.identity(4), 1)


def test_params_validate_shapes_and_heads():
    with pytest.raises(ShapeError):
        AttentionParams(np.eye(3), np.eye(3), np.eye(2))
    with pytest.raises(ConfigurationError):
        AttentionParams(np.eye(3), np.eye(3), np.eye(3), heads=2)


def test_weighted_mean_keeps_centers_of_empty_clusters():
    x = np.array([[1.0, 0.0], [1.0, 0.1]])
    # the far query's softmax weights underflow to exactly zero
    c0 = np.array([[1.0, 0.0], [1e3, 1e3]])
    trace = recurrent_cross_attention(c0, x, AttentionParams.identity(2), 1,
                                      similarity="neg_sq_dist", update="weighted_mean")
    assert np.allclose(trace.centers[0], x.mean(axis=0))
    assert np.array_equal(trace.centers[1], c0[1])


def test_single_pass_variants(rng):
    pixels, c0 = _inputs(rng)
    p = AttentionParams.identity(4)
    f = pixels.flatten()
    scores = c0 @ f.T
    assert np.allclose(vanilla_cross_attention(c0, pixels, p), c0 + softmax_axis(scores, "rows") @ f)
    assert np.allclose(cluster_softmax_attention(c0, pixels, p), c0 + softmax_axis(scores, "cols") @ f)
    onehot = np.zeros_like(scores)
    onehot[scores.argmax(axis=0), np.arange(f.shape[0])] = 1.0
    assert np.allclose(hard_assignment_attention(c0, pixels, p), c0 + onehot @ f)


def test_stacked_with_shared_queries_equals_recurrent(rng):
    pixels, c0 = _inputs(rng)
    p = AttentionParams.random(4, rng)
    recurrent = recurrent_cross_attention(c0, pixels, p, 3)
    stacked = stacked_cross_attention(c0, pixels, p, [p.w_q] * 3)
    assert np.allclose(stacked.centers, recurrent.centers)
    assert stacked.flop_count == recurrent.flop_count
    assert stacked.extra_params == 2 * 4 * 4
    assert stacked.key_projections == 1


def test_stacked_needs_query_weights(rng):
    pixels, c0 = _inputs(rng)
    with pytest.raises(RangeError):
        stacked_cross_attention(c0, pixels, AttentionParams.identity(4), [])


def test_pixel_self_attention_matches_dense(rng):
    pixels, _ = _inputs(rng, h=3, w=5, d=4)
    p = AttentionParams.random(4, rng)
    out, flops = pixel_self_attention(pixels, p, chunk=4)
    f = pixels.flatten()
    q, k, v = f @ p.w_q, f @ p.w_k, f @ p.w_v
    expected = f + softmax_axis(q @ k.T, "rows") @ v
    assert np.allclose(out, expected)
    assert flops == flop_count(3, 5, 1, 4, 1, "vanilla")


def test_decoder_default_layout():
    cfg = DecoderConfig(levels=4, k=5)
    assert cfg.layers_per_level == {0: 0, 1: 2, 2: 2, 3: 2}
    assert cfg.total_layers == 6
    assert cfg.layer_levels() == [1, 1, 2, 2, 3, 3]


def _pyramid(rng, levels, d):
    return [FeatureMap(rng.normal(size=(2 ** (level + 1), 2 ** (level + 1), d))) for level in range(levels)]


def test_zero_weights_leave_centers_unchanged(rng):
    cfg = DecoderConfig(levels=3, k=4)
    pyramid = _pyramid(rng, 3, 6)
    c0 = rng.normal(size=(4, 6))
    params = [AttentionParams.zeros(6) for _ in range(cfg.total_layers)]
    centers, traces = decoder_stack(c0, pyramid, params, cfg)
    assert np.array_equal(centers, c0)
    assert len(traces) == 6
    assert [trace.level for trace in traces] == [0, 0, 1, 1, 2, 2]
    assert all(len(trace.assignments) == cfg.t_iterations for trace in traces)


def test_decoder_adds_mlp_flops(rng):
    cfg = DecoderConfig(levels=1, k=2, t_iterations=2)
    pyramid = _pyramid(rng, 1, 4)
    p = AttentionParams.random(4, rng)
    _, traces = decoder_stack(rng.normal(size=(2, 4)), pyramid, [p, p], cfg)
    attention_only = flop_count(2, 2, 2, 4, 2, "recurrent")
    assert traces[0].flop_count == attention_only + p.mlp.flops(2)


def test_decoder_checks_layout(rng):
    cfg = DecoderConfig(levels=2, k=2)
    pyramid = _pyramid(rng, 2, 4)
    with pytest.raises(ConfigurationError):
        decoder_stack(np.zeros((2, 4)), pyramid, [AttentionParams.identity(4)], cfg)
    with pytest.raises(ConfigurationError):
        decoder_stack(np.zeros((2, 4)), pyramid[:1], [AttentionParams.identity(4)] * 4, cfg)
    with pytest.raises(ShapeError):
        decoder_stack(np.zeros((3, 4)), pyramid, [AttentionParams.identity(4)] * 4, cfg)


def test_params_bundle(tmp_path, rng):
    params = [
        AttentionParams.random(4, rng, heads=2),
        AttentionParams.identity(4),
        AttentionParams.identity(4, mlp=FfnHead.identity(4)),
    ]
    path = tmp_path / "layers.csw"
    save_params(path, params)
    loaded = load_params(path)
    assert len(loaded) == 3
    assert loaded[0].heads == 2
    assert np.array_equal(loaded[0].head_merge, params[0].head_merge)
    assert np.array_equal(loaded[0].mlp.w1, params[0].mlp.w1)
    assert loaded[1].mlp is None
    assert np.array_equal(loaded[2].mlp.w2, params[2].mlp.w2)


@pytest.mark.parametrize("seed", range(10))
def test_permuting_queries_permutes_centers(seed):
    rng = np.random.default_rng(seed)
    pixels, c0 = _inputs(rng, k=5)
    p = AttentionParams.random(4, rng, heads=2)
    perm = rng.permutation(5)
    trace = recurrent_cross_attention(c0, pixels, p, 3)
    permuted = recurrent_cross_attention(c0[perm], pixels, p, 3)
    assert np.allclose(permuted.centers, trace.centers[perm], atol=1e-12)
    for m, mp in zip(trace.assignments, permuted.assignments):
        assert np.allclose(mp, m[perm], atol=1e-12)


def test_hard_assignment_ties_go_to_lowest_query():
    f = np.array([[1.0, 2.0], [3.0, -1.0]])
    c0 = np.array([[0.5, 0.5], [0.5, 0.5]])
    out = hard_assignment_attention(c0, f, AttentionParams.identity(2))
    assert np.allclose(out[0], c0[0] + f.sum(axis=0))
    assert np.array_equal(out[1], c0[1])


def test_vanilla_attention_over_one_pixel(rng):
    f = rng.normal(size=(1, 3))
    c0 = rng.normal(size=(4, 3))
    p = AttentionParams.random(3, rng)
    assert np.allclose(vanilla_cross_attention(c0, f, p), c0 + f @ p.w_v)


def test_one_layer_with_zero_mlp_is_one_em_step(rng):
    x = rng.normal(size=(4, 5, 3))
    c0 = rng.normal(size=(3, 3))
    cfg = DecoderConfig(levels=1, k=3, t_iterations=1, layers_per_level={0: 1})
    p = AttentionParams.identity(3, mlp=FfnHead.zeros(3))
    centers, _ = decoder_stack(c0, [FeatureMap(x)], [p], cfg)
    flat = x.reshape(-1, 3)
    expected = c0 + m_step(e_step(c0, flat), flat, "paper_sum")
    assert np.allclose(centers, expected, atol=1e-12)


def _decoder_by_hand(c0, pyramid, params, layer_levels, t):
    c = c0.copy()
    for level, p in zip(layer_levels, params):
        f = pyramid[level].reshape(-1, pyramid[level].shape[-1])
        keys, values = f @ p.w_k, f @ p.w_v
        inner = c
        for _ in range(t):
            scores = (inner @ p.w_q) @ keys.T
            e = np.exp(scores - scores.max(axis=0))
            inner = (e / e.sum(axis=0)) @ values
        c = c + inner
        hidden = np.maximum(c @ p.mlp.w1 + p.mlp.b1, 0.0)
        c = c + hidden @ p.mlp.w2 + p.mlp.b2
    return c


def test_two_level_decoder_matches_direct_computation():
    rng = np.random.default_rng(21)
    pyramid = [rng.normal(size=(4, 4, 4)), rng.normal(size=(8, 8, 4))]
    c0 = rng.normal(size=(3, 4))
    cfg = DecoderConfig(levels=2, k=3)
    params = [AttentionParams.random(4, rng) for _ in range(cfg.total_layers)]
    centers, traces = decoder_stack(c0, [FeatureMap(level) for level in pyramid], params, cfg)
    expected = _decoder_by_hand(c0, pyramid, params, cfg.layer_levels(), cfg.t_iterations)
    assert [trace.level for trace in traces] == [0, 0, 1, 1]
    assert np.max(np.abs(centers - expected)) < 1e-10
