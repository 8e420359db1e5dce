"""
CSW1 binary matrix bundles

Layout (all integers unsigned 32-bit little-endian, floats IEEE float64
little-endian):

    offset 0   magic    4 bytes  b"CSW1"
    offset 4   count    u32      number of matrices that follow
    then, per matrix:
               rows     u32
               cols     u32
               data     rows*cols float64, row-major

Vectors are stored as 1 x n matrices. Higher-level layouts:

    attention params: per layer, 9 matrices
        [1x1 heads, w_q, w_k, w_v, head_merge, mlp_w1, mlp_b1, mlp_w2, mlp_b2]
        a layer without MLP stores 0-row matrices in the four MLP slots
    memory bank:      [1x2 (capacity, dim), queue_0, ..., queue_{K-1}]
        each queue is len x dim, oldest row first
"""

import struct

import numpy as np

from clustseg.config import BUNDLE_MAGIC
from clustseg.exceptions import ParseError

_U32 = struct.Struct("<I")
_F64 = np.dtype("<f8")


def write_matrices(path, matrices):
    with open(path, "wb") as f:
        f.write(BUNDLE_MAGIC)
        f.write(_U32.pack(len(matrices)))
        for m in matrices:
            m = np.asarray(m, dtype=np.float64)
            if m.ndim == 1:
                m = m[None, :]
            f.write(_U32.pack(m.shape[0]))
            f.write(_U32.pack(m.shape[1]))
            f.write(np.ascontiguousarray(m, dtype=_F64).tobytes())


def read_matrices(path):
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != BUNDLE_MAGIC:
        raise ParseError(f"{path}: not a CSW1 bundle", offset=0)
    offset = 4

    def take_u32():
        nonlocal offset
        if offset + 4 > len(blob):
            raise ParseError(f"{path}: truncated header", offset=offset)
        (value,) = _U32.unpack_from(blob, offset)
        offset += 4
        return value

    count = take_u32()
    matrices = []
    for _ in range(count):
        rows = take_u32()
        cols = take_u32()
        nbytes = rows * cols * _F64.itemsize
        if offset + nbytes > len(blob):
            raise ParseError(f"{path}: truncated matrix data", offset=offset)
        data = np.frombuffer(blob, dtype=_F64, count=rows * cols, offset=offset)
        matrices.append(data.astype(np.float64).reshape(rows, cols))
        offset += nbytes
    if offset != len(blob):
        raise ParseError(f"{path}: trailing bytes after last matrix", offset=offset)
    return matrices
