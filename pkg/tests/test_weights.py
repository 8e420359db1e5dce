import struct

import numpy as np
import pytest

from clustseg.exceptions import ParseError
from clustseg.weights import read_matrices, write_matrices


def test_layout_is_little_endian(tmp_path):
    path = tmp_path / "one.csw"
    write_matrices(path, [np.array([[1.5, -2.0]])])
    blob = path.read_bytes()
    assert blob[:4] == b"CSW1"
    assert struct.unpack("<III", blob[4:16]) == (1, 1, 2)
    assert struct.unpack("<dd", blob[16:]) == (1.5, -2.0)


def test_mixed_shapes(tmp_path):
    path = tmp_path / "mixed.csw"
    matrices = [np.arange(6.0).reshape(2, 3), np.zeros((0, 0)), np.array([7.0])]
    write_matrices(path, matrices)
    loaded = read_matrices(path)
    assert [m.shape for m in loaded] == [(2, 3), (0, 0), (1, 1)]
    assert np.array_equal(loaded[0], matrices[0])


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.csw"
    path.write_bytes(b"NOPE" + bytes(4))
    with pytest.raises(ParseError) as e:
        read_matrices(path)
    assert e.value.offset == 0


def test_truncated_data(tmp_path):
    path = tmp_path / "short.csw"
    write_matrices(path, [np.ones((2, 2))])
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(ParseError) as e:
        read_matrices(path)
    assert e.value.offset == 16


def test_truncated_header(tmp_path):
    path = tmp_path / "header.csw"
    path.write_bytes(b"CSW1" + struct.pack("<I", 1) + struct.pack("<I", 2))
    with pytest.raises(ParseError) as e:
        read_matrices(path)
    assert e.value.offset == 12


def test_trailing_bytes(tmp_path):
    path = tmp_path / "long.csw"
    write_matrices(path, [np.ones((1, 1))])
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(ParseError) as e:
        read_matrices(path)
    assert e.value.offset == 24
