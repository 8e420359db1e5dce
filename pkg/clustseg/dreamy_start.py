"""
Dreamy-Start query initialization

- scene-agnostic: class centers from a FIFO memory bank (semantic / stuff)
- scene-adaptive: seeds from position-embedded, FFN-transformed pixels (instance / thing)
- superpixel:     grid-sampled seeds
- panoptic:       stuff queries stacked above thing queries
"""

import threading
from collections import deque

import numpy as np

from clustseg.config import BANK_CAPACITY, SCENE_ADAPTIVE_K
from clustseg.exceptions import ParseError, RangeError, ShapeError, UninitializedClassError
from clustseg.ffn import FfnHead
from clustseg.linalg import FeatureMap, avg_pool, grid_sample, position_embed
from clustseg.weights import read_matrices, write_matrices

__all__ = [
    "FfnHead",
    "MemoryBank",
    "bank_push",
    "scene_agnostic_init",
    "scene_adaptive_init",
    "superpixel_init",
    "panoptic_init",
    "save_bank",
    "load_bank",
]


# =============================================================================
# MEMORY BANK
# =============================================================================

class MemoryBank:
    """
    K bounded FIFO queues of D-vectors, one per class

    A full queue drops its oldest vector on push. Pushes take a lock; reads
    between pushes may run concurrently.
    """

    def __init__(self, k, dim, capacity=BANK_CAPACITY):
        if capacity < 1:
            raise RangeError(f"bank capacity must be >= 1, got {capacity}")
        self.k = k
        self.dim = dim
        self.capacity = capacity
        self._queues = [deque(maxlen=capacity) for _ in range(k)]
        self._lock = threading.Lock()

    def push(self, class_id, embeddings):
        if not 0 <= class_id < self.k:
            raise RangeError(f"class_id {class_id} outside [0, {self.k})")
        rows = np.asarray(embeddings, dtype=np.float64)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.size and rows.shape[1] != self.dim:
            raise ShapeError(f"bank stores {self.dim}-vectors", rows.shape)
        with self._lock:
            for row in rows:
                self._queues[class_id].append(row.copy())
        return self

    def queue(self, class_id):
        """Contents of one queue, oldest first, as a len x D array"""
        q = self._queues[class_id]
        if not q:
            return np.zeros((0, self.dim))
        return np.stack(list(q))

    def __len__(self):
        return self.k

    def sizes(self):
        return [len(q) for q in self._queues]


def bank_push(bank, class_id, embeddings):
    return bank.push(class_id, embeddings)


def save_bank(path, bank):
    """Bank snapshot as a CSW1 bundle (layout in weights.py)"""
    header = np.array([[bank.capacity, bank.dim]], dtype=np.float64)
    write_matrices(path, [header] + [bank.queue(c) for c in range(bank.k)])


def load_bank(path):
    matrices = read_matrices(path)
    if not matrices or matrices[0].shape != (1, 2):
        raise ParseError(f"{path}: missing memory bank header")
    capacity, dim = (int(v) for v in matrices[0][0])
    bank = MemoryBank(len(matrices) - 1, dim, capacity)
    for class_id, rows in enumerate(matrices[1:]):
        if rows.size:
            bank.push(class_id, rows)
    return bank


# =============================================================================
# INITIALIZERS
# =============================================================================

def _apply(ffn, rows):
    return rows if ffn is None else ffn(rows)


def scene_agnostic_init(bank, ffn):
    """FFN applied to the mean embedding of every class queue"""
    pooled = []
    for class_id in range(bank.k):
        rows = bank.queue(class_id)
        if rows.shape[0] == 0:
            raise UninitializedClassError(class_id)
        pooled.append(avg_pool(rows))
    if not pooled:
        return np.zeros((0, bank.dim))
    return _apply(ffn, np.stack(pooled))


def scene_adaptive_init(i, ffn, k=SCENE_ADAPTIVE_K):
    """
    Content-adaptive seeds: PE -> FFN per pixel -> grid selection of k rows

    Returns the k_actual x D seeds (k_actual from the grid sampler).
    """
    if k > i.num_pixels:
        raise RangeError(f"k={k} exceeds the {i.num_pixels} pixels of the map")
    transformed = _apply(ffn, position_embed(i).flatten())
    centers, _ = grid_sample(FeatureMap.from_matrix(transformed, i.height, i.width), k)
    return centers


def superpixel_init(i, k_requested, ffn, embed_positions=True):
    """
    Grid seeds for superpixels

    Returns:
        (k_actual x D centers, (k_actual, 2) row/col seed coordinates, k_actual)
    """
    source = position_embed(i) if embed_positions else i
    seeds, coords = grid_sample(source, k_requested)
    return _apply(ffn, seeds), coords, seeds.shape[0]


def panoptic_init(bank, i, ffn_stuff, ffn_thing, k_thing):
    """
    Stuff queries (memory bank) followed by thing queries (scene-adaptive)

    Returns:
        (centers, stuff row range, thing row range)
    """
    stuff = scene_agnostic_init(bank, ffn_stuff) if bank.k else np.zeros((0, i.dim))
    thing = scene_adaptive_init(i, ffn_thing, k_thing) if k_thing else np.zeros((0, stuff.shape[1]))
    centers = np.vstack([stuff, thing])
    n_stuff = stuff.shape[0]
    return centers, range(0, n_stuff), range(n_stuff, centers.shape[0])
