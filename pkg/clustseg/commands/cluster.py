"""
cluster - EM clustering of a CSV point set

Input: one point per line, comma-separated floats, lines starting with '#'
skipped. Output CSV columns: point_index, hard_label, p_0 .. p_{K-1}.
"""

import numpy as np
import pandas as pd

from clustseg.commands import emit_json, require, resolve_options
from clustseg.config import ASSIGNMENT_MODES, CENTER_MODES, STANDALONE_MODE, T_MAX, TOL, default_seed
from clustseg.em import em_cluster, forgy_init
from clustseg.exceptions import EXIT_OK, ParseError, UsageError
from clustseg.logs import get_logger

log = get_logger("CLUSTER")

CONVERTERS = {"k": int, "t_max": int, "tol": float, "seed": int}


def _defaults():
    return {
        "input": None,
        "k": None,
        "mode": STANDALONE_MODE,
        "assignment": "soft",
        "t_max": T_MAX,
        "tol": TOL,
        "seed": default_seed(),
        "out": None,
    }


def add_arguments(parser):
    parser.add_argument("--input", help="points CSV")
    parser.add_argument("--k", type=int, help="number of clusters")
    parser.add_argument("--mode", choices=CENTER_MODES, help=f"center update (default {STANDALONE_MODE})")
    parser.add_argument("--assignment", choices=ASSIGNMENT_MODES, help="soft EM or hard Lloyd steps")
    parser.add_argument("--t-max", dest="t_max", type=int, help=f"iteration cap (default {T_MAX})")
    parser.add_argument("--tol", type=float, help=f"center-shift stop threshold (default {TOL})")
    parser.add_argument("--seed", type=int, help="initialization seed (default $CLUSTSEG_SEED or 0)")
    parser.add_argument("--out", help="result CSV")


def read_points(path):
    """
    Parse the points CSV

    Returns:
        N x D float64 array

    Raises:
        ParseError naming the 1-based line of a bad value or a ragged row
    """
    rows = []
    width = None
    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split(",")
            try:
                values = [float(v) for v in fields]
            except ValueError:
                raise ParseError(f"{path}: non-numeric value", line=line_no)
            if not np.all(np.isfinite(values)):
                raise ParseError(f"{path}: non-finite value", line=line_no)
            if width is None:
                width = len(values)
            elif len(values) != width:
                raise ParseError(f"{path}: expected {width} columns, got {len(values)}", line=line_no)
            rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no points")
    return np.array(rows, dtype=np.float64)


def run(args):
    options = resolve_options(args, _defaults(), CONVERTERS)
    require(options, "input", "k", "out")
    if options["mode"] not in CENTER_MODES:
        raise UsageError(f"mode must be one of {CENTER_MODES}")
    if options["assignment"] not in ASSIGNMENT_MODES:
        raise UsageError(f"assignment must be one of {ASSIGNMENT_MODES}")

    x = read_points(options["input"])
    k = options["k"]
    init = forgy_init(x, k, options["seed"])
    result = em_cluster(
        x,
        k,
        init,
        t_max=options["t_max"],
        tol=options["tol"],
        mode=options["mode"],
        assignment=options["assignment"],
    )

    df = pd.DataFrame({"point_index": np.arange(x.shape[0]), "hard_label": result.labels})
    for j in range(k):
        df[f"p_{j}"] = result.soft[j]
    df.to_csv(options["out"], index=False, float_format="%.17g")

    for iteration, value in enumerate(result.objective_trace, start=1):
        emit_json({"iteration": iteration, "objective": float(value)})
    emit_json({"converged": bool(result.converged), "iterations": result.iterations_run, "k": k})
    log.debug(f"wrote {x.shape[0]} rows to {options['out']}")
    return EXIT_OK, f"clustered {x.shape[0]} points into {k} clusters"
