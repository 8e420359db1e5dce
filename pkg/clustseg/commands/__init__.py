"""
Sub-command modules

Each module exposes add_arguments(parser) and run(args) -> (exit_code, message).
"""

import json
import sys

from clustseg.config import load_config_file, merge_run_config
from clustseg.exceptions import UsageError


def resolve_options(args, defaults, converters):
    """
    Flags over --config file values over defaults

    Returns:
        Dict with one entry per key of defaults
    """
    file_values = {}
    if getattr(args, "config", None):
        file_values = load_config_file(args.config, allowed_keys=set(defaults))
    flags = {key: getattr(args, key, None) for key in defaults}
    return merge_run_config(flags, file_values, converters, defaults)


def require(options, *keys):
    missing = [f"--{key.replace('_', '-')}" for key in keys if options.get(key) is None]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join(missing)}")


def int_list(raw):
    """'1,2,3' -> [1, 2, 3]"""
    if isinstance(raw, list):
        return raw
    values = [int(v) for v in str(raw).split(",") if v.strip()]
    if not values:
        raise ValueError("empty list")
    return values


def str_list(raw):
    if isinstance(raw, list):
        return raw
    return [v.strip() for v in str(raw).split(",") if v.strip()]


def flag(raw):
    if isinstance(raw, bool):
        return raw
    value = str(raw).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def emit_json(record, stream=None):
    """One JSON object per line on stdout"""
    stream = stream or sys.stdout
    stream.write(json.dumps(record, sort_keys=True, allow_nan=False) + "\n")
    stream.flush()
