"""Shared fixtures; invariant assertions are switched on for the whole suite"""

import os
from collections import deque

import numpy as np
import pytest

os.environ["CLUSTSEG_CHECK_INVARIANTS"] = "1"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: wall-clock comparisons (deselect with -m 'not slow')")


def _flood_fill_regions(labels):
    """Number of 4-connected regions per label, by plain BFS"""
    labels = np.asarray(labels)
    h, w = labels.shape
    seen = np.zeros((h, w), dtype=bool)
    regions = {}
    for y in range(h):
        for x in range(w):
            if seen[y, x]:
                continue
            lab = labels[y, x]
            regions[lab] = regions.get(lab, 0) + 1
            queue = deque([(y, x)])
            seen[y, x] = True
            while queue:
                cy, cx = queue.popleft()
                for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                    if 0 <= ny < h and 0 <= nx < w and not seen[ny, nx] and labels[ny, nx] == lab:
                        seen[ny, nx] = True
                        queue.append((ny, nx))
    return regions


@pytest.fixture
def regions():
    return _flood_fill_regions


@pytest.fixture
def connected():
    def check(labels):
        return all(count == 1 for count in _flood_fill_regions(labels).values())
    return check


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
