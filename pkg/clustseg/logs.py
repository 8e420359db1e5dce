"""
Tagged debug logging

Same shape as a `[TAG] HH:MM:SS - message` print helper, routed through
`logging` on stderr so JSON written to stdout stays clean.
"""

import logging
import sys
from datetime import datetime

from clustseg.config import debug_enabled

_FORMAT = "[%(tag)s] %(asctime)s - %(message)s"
_DATEFMT = "%H:%M:%S"

_handler = None


def _get_handler():
    global _handler
    if _handler is None:
        _handler = logging.StreamHandler(sys.stderr)
        _handler.setFormatter(logging.Formatter(_FORMAT, datefmt=_DATEFMT))
    return _handler


class _TagAdapter(logging.LoggerAdapter):
    def process(self, msg, kwargs):
        kwargs.setdefault("extra", {})["tag"] = self.extra["tag"]
        return msg, kwargs


def get_logger(tag):
    """Logger for one subsystem; DEBUG level when CLUSTSEG_DEBUG is set"""
    logger = logging.getLogger(f"clustseg.{tag.lower()}")
    if not logger.handlers:
        logger.addHandler(_get_handler())
        logger.propagate = False
    logger.setLevel(logging.DEBUG if debug_enabled() else logging.WARNING)
    return _TagAdapter(logger, {"tag": tag.upper()})


def elapsed(start):
    """Seconds since `start` (a datetime), for 'done in 0.42s' style messages"""
    return (datetime.now() - start).total_seconds()
