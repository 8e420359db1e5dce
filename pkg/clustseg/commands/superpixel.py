"""
superpixel - segment one image, write label PGM + overlay, print metrics JSON

With --baseline-slic the SLIC baseline runs on the same input; its files get
a `_slic` suffix and its metrics line is tagged "method": "slic".
"""

import os
from datetime import datetime

from clustseg.commands import emit_json, flag, require, resolve_options
from clustseg.config import (
    COLOR_WEIGHT,
    MIN_REGION_FRAC,
    OVERLAY_COLOR,
    POSITION_WEIGHT,
    SLIC_COMPACTNESS,
    SLIC_ITERATIONS,
    T_ITERATIONS,
)
from clustseg.exceptions import EXIT_OK, UsageError
from clustseg.imageio import load_image, load_label_pgm, save_label_pgm, save_overlay
from clustseg.logs import elapsed, get_logger
from clustseg.metrics import asa, compactness
from clustseg.slic import slic_baseline
from clustseg.superpixel import SuperpixelConfig, segment_superpixels

log = get_logger("SUPERPIXEL")

CONVERTERS = {
    "k": int,
    "t": int,
    "color_weight": float,
    "position_weight": float,
    "min_region_frac": float,
    "use_ffn": flag,
    "asa": flag,
    "baseline_slic": flag,
    "slic_compactness": float,
    "slic_iters": int,
}

DEFAULTS = {
    "input": None,
    "k": None,
    "t": T_ITERATIONS,
    "color_weight": COLOR_WEIGHT,
    "position_weight": POSITION_WEIGHT,
    "min_region_frac": MIN_REGION_FRAC,
    "use_ffn": False,
    "gt": None,
    "asa": False,
    "out_labels": None,
    "out_overlay": None,
    "overlay_color": OVERLAY_COLOR,
    "baseline_slic": False,
    "slic_compactness": SLIC_COMPACTNESS,
    "slic_iters": SLIC_ITERATIONS,
}


def add_arguments(parser):
    parser.add_argument("--input", help="P6 PPM or PNG image")
    parser.add_argument("--k", type=int, help="requested superpixel count")
    parser.add_argument("--t", type=int, help=f"clustering iterations (default {T_ITERATIONS})")
    parser.add_argument("--color-weight", dest="color_weight", type=float)
    parser.add_argument("--position-weight", dest="position_weight", type=float, help="compactness knob")
    parser.add_argument("--min-region-frac", dest="min_region_frac", type=float)
    parser.add_argument("--use-ffn", dest="use_ffn", action="store_true", default=None,
                        help="pass seeds through the identity FFN")
    parser.add_argument("--gt", help="ground-truth label PGM (enables ASA)")
    parser.add_argument("--asa", action="store_true", default=None, help="require ASA (needs --gt)")
    parser.add_argument("--out-labels", dest="out_labels", help="label map PGM")
    parser.add_argument("--out-overlay", dest="out_overlay", help="boundary overlay .ppm or .png")
    parser.add_argument("--overlay-color", dest="overlay_color", help=f"boundary color (default {OVERLAY_COLOR})")
    parser.add_argument("--baseline-slic", dest="baseline_slic", action="store_true", default=None)
    parser.add_argument("--slic-compactness", dest="slic_compactness", type=float)
    parser.add_argument("--slic-iters", dest="slic_iters", type=int)


def _suffixed(path, suffix):
    stem, ext = os.path.splitext(path)
    return f"{stem}{suffix}{ext}"


def _write_outputs(image, labels, k_actual, options, suffix=""):
    if options["out_labels"]:
        save_label_pgm(labels, _suffixed(options["out_labels"], suffix), k_actual)
    if options["out_overlay"]:
        save_overlay(image, labels, _suffixed(options["out_overlay"], suffix), options["overlay_color"])


def _metrics(labels, gt, info):
    record = dict(info)
    record["asa"] = asa(labels, gt) if gt is not None else None
    record["co"] = compactness(labels)
    return record


def run(args):
    options = resolve_options(args, DEFAULTS, CONVERTERS)
    require(options, "input", "k")
    if options["asa"] and not options["gt"]:
        raise UsageError("ASA requested but no --gt label map given")

    image = load_image(options["input"])
    gt = load_label_pgm(options["gt"]) if options["gt"] else None

    cfg = SuperpixelConfig(
        k_requested=options["k"],
        t_iterations=options["t"],
        color_weight=options["color_weight"],
        position_weight=options["position_weight"],
        min_region_frac=options["min_region_frac"],
        use_ffn=options["use_ffn"],
    )
    start = datetime.now()
    labels, info = segment_superpixels(image, cfg)
    log.debug(f"pipeline done in {elapsed(start):.3f}s")
    _write_outputs(image, labels, info["k_actual"], options)
    record = _metrics(labels, gt, info)

    if not options["baseline_slic"]:
        emit_json(record)
        return EXIT_OK, f"{info['k_actual']} superpixels"

    record["method"] = "clustseg"
    emit_json(record)
    start = datetime.now()
    slic_labels = slic_baseline(
        image,
        options["k"],
        compactness_knob=options["slic_compactness"],
        iters=options["slic_iters"],
        min_region_frac=options["min_region_frac"],
    )
    log.debug(f"slic baseline done in {elapsed(start):.3f}s")
    _write_outputs(image, slic_labels, info["k_actual"], options, suffix="_slic")
    slic_info = {
        "k_requested": options["k"],
        "k_actual": info["k_actual"],
        "iters": options["slic_iters"],
        "flops": None,
        "method": "slic",
    }
    emit_json(_metrics(slic_labels, gt, slic_info))
    return EXIT_OK, f"{info['k_actual']} superpixels (with slic baseline)"
