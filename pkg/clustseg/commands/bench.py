"""
bench - exact flop counts and median wall time per (HW, T, variant)

Sizes in --hw-list are either `HxW` or a single side N (an N x N map).
Wall time is the median of BENCH_REPEATS timed runs after BENCH_WARMUP
untimed ones, on seeded random inputs.
"""

import json
import statistics
import time

import numpy as np

from clustseg.attention import (
    AttentionParams,
    pixel_self_attention,
    recurrent_cross_attention,
    stacked_cross_attention,
)
from clustseg.commands import emit_json, int_list, require, resolve_options, str_list
from clustseg.config import BENCH_REPEATS, BENCH_VARIANTS, BENCH_WARMUP, default_seed
from clustseg.exceptions import EXIT_OK, UsageError
from clustseg.flops import VARIANTS, flop_count
from clustseg.linalg import FeatureMap
from clustseg.logs import get_logger

log = get_logger("BENCH")


def parse_sizes(raw):
    """'32,48x64' -> [(32, 32), (48, 64)]"""
    if isinstance(raw, list):
        return raw
    sizes = []
    for item in str(raw).split(","):
        item = item.strip().lower()
        if not item:
            continue
        if "x" in item:
            h, w = item.split("x", 1)
            sizes.append((int(h), int(w)))
        else:
            sizes.append((int(item), int(item)))
    if not sizes:
        raise ValueError("empty size list")
    return sizes


CONVERTERS = {
    "hw_list": parse_sizes,
    "k": int,
    "d": int,
    "t_list": int_list,
    "variant_list": str_list,
    "heads": int,
    "seed": int,
    "repeats": int,
    "warmup": int,
}


def _defaults():
    return {
        "hw_list": [(32, 32), (64, 64)],
        "k": 32,
        "d": 64,
        "t_list": [1, 2, 3],
        "variant_list": list(BENCH_VARIANTS),
        "heads": 1,
        "seed": default_seed(),
        "repeats": BENCH_REPEATS,
        "warmup": BENCH_WARMUP,
        "out": None,
    }


def add_arguments(parser):
    parser.add_argument("--hw-list", dest="hw_list", type=parse_sizes, help="e.g. 32,64 or 48x64")
    parser.add_argument("--k", type=int, help="number of queries")
    parser.add_argument("--d", type=int, help="embedding dim")
    parser.add_argument("--t-list", dest="t_list", type=int_list, help="e.g. 1,2,3")
    parser.add_argument("--variant-list", dest="variant_list", type=str_list,
                        help=f"subset of {','.join(VARIANTS)}")
    parser.add_argument("--heads", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--repeats", type=int, help=f"timed runs (default {BENCH_REPEATS})")
    parser.add_argument("--warmup", type=int, help=f"untimed runs (default {BENCH_WARMUP})")
    parser.add_argument("--out", help="JSON table; stdout when omitted")


def build_inputs(h, w, k, d, heads, seed):
    """Seeded pixel map, initial queries and projections for one shape"""
    rng = np.random.default_rng(seed)
    pixels = FeatureMap(rng.standard_normal((h, w, d)))
    c0 = rng.standard_normal((k, d))
    params = AttentionParams.random(d, rng, heads=heads, with_mlp=False)
    return pixels, c0, params, rng


def run_variant(variant, pixels, c0, params, t, query_weights=None):
    """
    One forward pass

    Returns:
        Multiply-adds counted by the instrumented pass
    """
    if variant == "vanilla":
        _, flops = pixel_self_attention(pixels, params)
        return flops
    if variant == "recurrent":
        return recurrent_cross_attention(c0, pixels, params, t).flop_count
    if variant == "stacked":
        return stacked_cross_attention(c0, pixels, params, query_weights).flop_count
    if variant == "cross":
        return recurrent_cross_attention(c0, pixels, params, 1).flop_count
    raise UsageError(f"unknown variant {variant!r}")


def measure(fn, repeats, warmup):
    for _ in range(warmup):
        fn()
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def bench_records(sizes, k, d, t_list, variants, heads=1, seed=0, repeats=BENCH_REPEATS, warmup=BENCH_WARMUP):
    """One record per (size, T, variant), in that nesting order"""
    records = []
    for h, w in sizes:
        pixels, c0, params, rng = build_inputs(h, w, k, d, heads, seed)
        query_weights = [params.w_q] + [rng.standard_normal((d, d)) / np.sqrt(d) for _ in range(max(t_list) - 1)]
        vanilla_wall = None
        for t in t_list:
            for variant in variants:
                flops = flop_count(h, w, k, d, t, variant, heads=heads)
                qw = query_weights[:t]
                if variant == "vanilla" and vanilla_wall is not None:
                    # independent of T
                    wall = vanilla_wall
                else:
                    counted = run_variant(variant, pixels, c0, params, t, qw)
                    if counted != flops:
                        log.warning(f"{variant} {h}x{w} T={t}: counted {counted} flops, closed form {flops}")
                    wall = measure(lambda: run_variant(variant, pixels, c0, params, t, qw), repeats, warmup)
                    if variant == "vanilla":
                        vanilla_wall = wall
                records.append({
                    "h": h,
                    "w": w,
                    "hw": h * w,
                    "k": k,
                    "d": d,
                    "t": t,
                    "heads": heads,
                    "variant": variant,
                    "flops": int(flops),
                    "wall_time_s": wall,
                    "extra_params": (t - 1) * d * d if variant == "stacked" else 0,
                })
                log.debug(f"{variant} {h}x{w} T={t}: {flops} flops, {wall:.4f}s median")
    return records


def run(args):
    options = resolve_options(args, _defaults(), CONVERTERS)
    require(options, "hw_list", "k", "d", "t_list", "variant_list")
    unknown = [v for v in options["variant_list"] if v not in VARIANTS]
    if unknown:
        raise UsageError(f"unknown variant(s) {unknown}; choose from {VARIANTS}")
    sizes = options["hw_list"]
    if min(options["k"], options["d"], options["heads"], options["repeats"]) < 1 or options["warmup"] < 0:
        raise UsageError("k, d, heads and repeats must be positive, warmup non-negative")
    if any(h < 1 or w < 1 for h, w in sizes) or min(options["t_list"]) < 1:
        raise UsageError("sizes and T values must be positive")
    if options["d"] % options["heads"] != 0:
        raise UsageError(f"d={options['d']} is not divisible by heads={options['heads']}")

    records = bench_records(
        sizes,
        options["k"],
        options["d"],
        options["t_list"],
        options["variant_list"],
        heads=options["heads"],
        seed=options["seed"],
        repeats=options["repeats"],
        warmup=options["warmup"],
    )
    if options["out"]:
        with open(options["out"], "w", encoding="utf-8") as f:
            json.dump(records, f, sort_keys=True, indent=2)
            f.write("\n")
    else:
        for record in records:
            emit_json(record)
    return EXIT_OK, f"{len(records)} benchmark records"
