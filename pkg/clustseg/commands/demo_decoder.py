"""
demo-decoder - run the toy hierarchical decoder and dump assignment statistics

The pyramid is seeded Gaussian noise, level 0 coarsest, the finest level
DEMO_FINEST_SIZE pixels on a side and each coarser one half the size.
"""

import json

import numpy as np

from clustseg.attention import AttentionParams, DecoderConfig, decoder_stack
from clustseg.commands import emit_json, flag, require, resolve_options
from clustseg.config import (
    DECODER_LEVELS,
    DEMO_DIM,
    DEMO_FINEST_SIZE,
    DEMO_INITS,
    SUPERVISION_MODES,
    T_ITERATIONS,
    default_seed,
)
from clustseg.dreamy_start import scene_adaptive_init
from clustseg.exceptions import EXIT_OK, UsageError
from clustseg.ffn import FfnHead
from clustseg.linalg import FeatureMap
from clustseg.logs import get_logger

log = get_logger("DECODER")

CONVERTERS = {
    "seed": int,
    "k": int,
    "levels": int,
    "t": int,
    "dim": int,
    "heads": int,
    "zero_weights": flag,
}


def _defaults():
    return {
        "seed": default_seed(),
        "k": 16,
        "levels": DECODER_LEVELS,
        "t": T_ITERATIONS,
        "dim": DEMO_DIM,
        "heads": 1,
        "init": "dreamy",
        "supervision": "every",
        "zero_weights": False,
        "out": None,
    }


def add_arguments(parser):
    parser.add_argument("--seed", type=int)
    parser.add_argument("--k", type=int, help="requested number of queries")
    parser.add_argument("--levels", type=int, help=f"pyramid levels (default {DECODER_LEVELS})")
    parser.add_argument("--t", type=int, help=f"iterations per layer (default {T_ITERATIONS})")
    parser.add_argument("--dim", type=int, help=f"embedding dim (default {DEMO_DIM})")
    parser.add_argument("--heads", type=int)
    parser.add_argument("--init", choices=DEMO_INITS, help="Dreamy-Start seeds or free Gaussian queries")
    parser.add_argument("--supervision", choices=SUPERVISION_MODES,
                        help="report every E-step or only the last one of each layer")
    parser.add_argument("--zero-weights", dest="zero_weights", action="store_true", default=None)
    parser.add_argument("--out", help="trace JSON; stdout when omitted")


def build_pyramid(levels, dim, rng, finest=DEMO_FINEST_SIZE):
    sides = [max(1, finest >> (levels - 1 - level)) for level in range(levels)]
    return [FeatureMap(rng.standard_normal((s, s, dim))) for s in sides]


def column_entropy(m):
    """Entropy (nats) of every column of a K x HW assignment"""
    safe = np.where(m > 0, m, 1.0)
    return -np.sum(m * np.log(safe), axis=0)


def iteration_stats(m, iteration):
    entropy = column_entropy(m)
    sums = m.sum(axis=0)
    return {
        "iteration": iteration,
        "entropy_mean": float(entropy.mean()),
        "entropy_min": float(entropy.min()),
        "entropy_max": float(entropy.max()),
        "column_sum_min": float(sums.min()),
        "column_sum_max": float(sums.max()),
    }


def decoder_trace(seed, k, levels, t, dim=DEMO_DIM, heads=1, init="dreamy", supervision="every",
                  zero_weights=False):
    """
    Run the toy decoder

    Returns:
        JSON-ready dict of per-layer, per-iteration statistics and center norms
    """
    rng = np.random.default_rng(seed)
    pyramid = build_pyramid(levels, dim, rng)
    finest = pyramid[-1]
    if init == "dreamy":
        c0 = scene_adaptive_init(finest, FfnHead.random(dim, rng), k)
    else:
        c0 = rng.standard_normal((k, dim))

    cfg = DecoderConfig(levels=levels, k=c0.shape[0], t_iterations=t)
    if zero_weights:
        params = [AttentionParams.zeros(dim) for _ in range(cfg.total_layers)]
    else:
        params = [AttentionParams.random(dim, rng, heads=heads) for _ in range(cfg.total_layers)]
    centers, traces = decoder_stack(c0, pyramid, params, cfg)

    layers = []
    for index, trace in enumerate(traces):
        steps = list(enumerate(trace.assignments, start=1))
        if supervision == "final":
            steps = steps[-1:]
        layers.append({
            "layer": index,
            "level": trace.level,
            "pixels": pyramid[trace.level].num_pixels,
            "flops": trace.flop_count,
            "iterations": [iteration_stats(m, i) for i, m in steps],
        })
        log.debug(f"layer {index}: {len(steps)} supervision outputs")

    return {
        "seed": seed,
        "k_requested": k,
        "k_actual": int(c0.shape[0]),
        "levels": levels,
        "t": t,
        "dim": dim,
        "heads": heads,
        "init": init,
        "supervision": supervision,
        "layers": layers,
        "initial_center_norms": [float(v) for v in np.linalg.norm(c0, axis=1)],
        "final_center_norms": [float(v) for v in np.linalg.norm(centers, axis=1)],
        "center_delta": float(np.max(np.abs(centers - c0))) if centers.size else 0.0,
    }


def run(args):
    options = resolve_options(args, _defaults(), CONVERTERS)
    require(options, "k", "levels", "t")
    if options["init"] not in DEMO_INITS:
        raise UsageError(f"init must be one of {DEMO_INITS}")
    if options["supervision"] not in SUPERVISION_MODES:
        raise UsageError(f"supervision must be one of {SUPERVISION_MODES}")
    if min(options["k"], options["levels"], options["t"], options["dim"], options["heads"]) < 1:
        raise UsageError("k, levels, t, dim and heads must be positive")
    if options["dim"] % options["heads"] != 0:
        raise UsageError(f"dim={options['dim']} is not divisible by heads={options['heads']}")
    if options["init"] == "dreamy":
        if options["dim"] % 2 != 0:
            raise UsageError("dreamy init needs an even --dim for the position embedding")
        if options["k"] > DEMO_FINEST_SIZE * DEMO_FINEST_SIZE:
            raise UsageError(f"k={options['k']} exceeds the {DEMO_FINEST_SIZE}x{DEMO_FINEST_SIZE} finest level")

    trace = decoder_trace(
        options["seed"],
        options["k"],
        options["levels"],
        options["t"],
        dim=options["dim"],
        heads=options["heads"],
        init=options["init"],
        supervision=options["supervision"],
        zero_weights=options["zero_weights"],
    )
    if options["out"]:
        with open(options["out"], "w", encoding="utf-8") as f:
            json.dump(trace, f, sort_keys=True, indent=2)
            f.write("\n")
    else:
        emit_json(trace)
    return EXIT_OK, f"{len(trace['layers'])} decoder layers traced"
