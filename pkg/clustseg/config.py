"""
Configuration and Constants for ClustSeg
Clustering-as-attention toolkit: EM clustering, recurrent cross-attention,
Dreamy-Start query initialization and superpixel segmentation.
"""

import os

from clustseg.exceptions import UsageError

# =============================================================================
# APPLICATION INFO
# =============================================================================
APP_NAME = "clustseg"
VERSION = "1.0.0"

# =============================================================================
# ENVIRONMENT
# =============================================================================
SEED_ENV_VAR = "CLUSTSEG_SEED"
DEBUG_ENV_VAR = "CLUSTSEG_DEBUG"
CHECK_INVARIANTS_ENV_VAR = "CLUSTSEG_CHECK_INVARIANTS"

DEFAULT_SEED = 0


def _env_flag(name):
    return os.environ.get(name, "").strip().lower() in ("1", "true", "yes", "on")


def debug_enabled():
    return _env_flag(DEBUG_ENV_VAR)


def check_invariants():
    """Test-mode invariant assertions (softmax column law etc.)"""
    return _env_flag(CHECK_INVARIANTS_ENV_VAR)


def default_seed():
    """Seed fallback: CLUSTSEG_SEED, else DEFAULT_SEED"""
    raw = os.environ.get(SEED_ENV_VAR, "").strip()
    if not raw:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV_VAR} must be an integer, got {raw!r}")


# =============================================================================
# NUMERICS
# =============================================================================
SOFTMAX_SUM_TOL = 1e-12
PE_BASE = 10000.0

# Grid sizes are floored after adding this slack so that exact products
# like 60 * sqrt(16 / 3600) do not round down to 3.
GRID_FLOOR_EPS = 1e-9

# =============================================================================
# EM CLUSTERING
# =============================================================================
T_MAX = 100
TOL = 1e-9
STANDALONE_MODE = "weighted_mean"
CENTER_MODES = ["paper_sum", "weighted_mean"]
ASSIGNMENT_MODES = ["soft", "hard"]

# =============================================================================
# RECURRENT CROSS-ATTENTION / DECODER
# =============================================================================
T_ITERATIONS = 3
DECODER_LEVELS = 3
LAYERS_PER_LEVEL = 2
FINEST_LEVELS_WITH_LAYERS = 3
SIMILARITIES = ["dot", "neg_sq_dist"]

# Rows of pixel queries per block in pixel self-attention
SELF_ATTENTION_CHUNK = 1024

# =============================================================================
# DREAMY-START
# =============================================================================
BANK_CAPACITY = 256
SCENE_ADAPTIVE_K = 100
FFN_HIDDEN_FACTOR = 2

# =============================================================================
# WEIGHT BUNDLES
# =============================================================================
BUNDLE_MAGIC = b"CSW1"

# =============================================================================
# SUPERPIXELS
# =============================================================================
COLOR_WEIGHT = 1.0
POSITION_WEIGHT = 10.0
MIN_REGION_FRAC = 0.25
SLIC_COMPACTNESS = 10.0
SLIC_ITERATIONS = 10
OVERLAY_COLOR = "#FF0000"

# =============================================================================
# BENCHMARK
# =============================================================================
BENCH_REPEATS = 5
BENCH_WARMUP = 1
BENCH_VARIANTS = ["vanilla", "recurrent", "stacked"]

# =============================================================================
# DEMO DECODER
# =============================================================================
DEMO_DIM = 8
DEMO_FINEST_SIZE = 16
DEMO_INITS = ["dreamy", "free"]
SUPERVISION_MODES = ["every", "final"]

# =============================================================================
# COMMAND REGISTRY
# =============================================================================
COMMANDS = [
    {"id": "cluster", "name": "EM clustering of a CSV point set", "module": "clustseg.commands.cluster"},
    {"id": "superpixel", "name": "Superpixel segmentation of an image", "module": "clustseg.commands.superpixel"},
    {"id": "bench", "name": "FLOP and wall-time benchmark", "module": "clustseg.commands.bench"},
    {"id": "demo-decoder", "name": "Toy recurrent decoder trace", "module": "clustseg.commands.demo_decoder"},
]

# =============================================================================
# RUN CONFIG FILES
# =============================================================================

def _normalize_key(key):
    return key.strip().lstrip("-").replace("-", "_")


def load_config_file(path, allowed_keys):
    """
    Parse a key=value config file

    One pair per line, '#' starts a comment. Keys may be written with dashes
    or underscores (`t-max` and `t_max` are the same key).

    Returns:
        Dict of normalized key -> raw string value
    """
    values = {}
    with open(path, "r", encoding="utf-8") as f:
        for line_no, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{line_no}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            key = _normalize_key(key)
            if key not in allowed_keys:
                raise UsageError(f"{path}:{line_no}: unknown config key {key!r}")
            values[key] = value.strip()
    return values


def merge_run_config(flags, file_values, converters, defaults):
    """
    Merge parsed flags over config-file values over defaults

    Args:
        flags: Dict of flag values, None where the flag was not given
        file_values: Dict of raw strings from load_config_file
        converters: Dict of key -> callable turning a raw string into a value
        defaults: Dict of key -> default value
    """
    merged = dict(defaults)
    for key, raw in file_values.items():
        convert = converters.get(key, str)
        try:
            merged[key] = convert(raw)
        except (TypeError, ValueError) as e:
            raise UsageError(f"bad value for config key {key!r}: {e}")
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    return merged
