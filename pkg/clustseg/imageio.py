"""
Image and label-map I/O

- RGB input: binary PPM (P6) parsed here so errors can name a byte offset,
  PNG through Pillow
- Label maps: PGM, written as ASCII P2 with maxval k_actual - 1, read as P2 or P5
- Overlays: boundary pixels painted in one color, saved as PPM or PNG
"""

import os

import numpy as np
from PIL import Image, UnidentifiedImageError

from clustseg.color import hex_to_rgb
from clustseg.config import OVERLAY_COLOR
from clustseg.exceptions import ConfigurationError, ParseError

PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"
_WHITESPACE = b" \t\r\n\x0b\x0c"


# =============================================================================
# NETPBM PARSING
# =============================================================================

class _NetpbmReader:
    """Header tokenizer that tracks byte offsets for error messages"""

    def __init__(self, blob, path):
        self.blob = blob
        self.path = path
        self.pos = 0

    def fail(self, message, offset=None):
        raise ParseError(f"{self.path}: {message}", offset=self.pos if offset is None else offset)

    def skip_space(self):
        while self.pos < len(self.blob):
            ch = self.blob[self.pos:self.pos + 1]
            if ch == b"#":
                end = self.blob.find(b"\n", self.pos)
                self.pos = len(self.blob) if end < 0 else end + 1
            elif ch in _WHITESPACE:
                self.pos += 1
            else:
                return

    def token(self):
        self.skip_space()
        start = self.pos
        while self.pos < len(self.blob) and self.blob[self.pos:self.pos + 1] not in _WHITESPACE + b"#":
            self.pos += 1
        if start == self.pos:
            self.fail("unexpected end of header")
        return self.blob[start:self.pos], start

    def integer(self, what):
        raw, start = self.token()
        if not raw.isdigit():
            self.fail(f"expected {what}, got {raw[:16]!r}", offset=start)
        return int(raw), start

    def header(self, magics):
        magic, _ = self.token()
        if magic not in magics:
            self.fail(f"expected one of {[m.decode() for m in magics]}, got {magic[:8]!r}", offset=0)
        width, at = self.integer("width")
        height, at_h = self.integer("height")
        if width < 1:
            self.fail("width must be positive", offset=at)
        if height < 1:
            self.fail("height must be positive", offset=at_h)
        maxval, at_m = self.integer("maxval")
        if not 0 < maxval < 65536:
            self.fail(f"maxval {maxval} out of range", offset=at_m)
        return magic, width, height, maxval


def _read_raster(reader, count, maxval):
    # exactly one whitespace byte separates header and raster
    if reader.pos >= len(reader.blob) or reader.blob[reader.pos:reader.pos + 1] not in _WHITESPACE:
        reader.fail("missing whitespace before raster")
    reader.pos += 1
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
    nbytes = count * dtype.itemsize
    if reader.pos + nbytes > len(reader.blob):
        reader.fail(f"raster needs {nbytes} bytes, file has {len(reader.blob) - reader.pos}")
    data = np.frombuffer(reader.blob, dtype=dtype, count=count, offset=reader.pos)
    if np.any(data > maxval):
        bad = int(np.argmax(data > maxval))
        reader.fail(f"sample exceeds maxval {maxval}", offset=reader.pos + bad * dtype.itemsize)
    return data.astype(np.int64)


def _read_ppm(blob, path):
    reader = _NetpbmReader(blob, path)
    _, width, height, maxval = reader.header([b"P6"])
    data = _read_raster(reader, width * height * 3, maxval)
    if maxval != 255:
        data = np.rint(data * 255.0 / maxval).astype(np.int64)
    return data.astype(np.uint8).reshape(height, width, 3)


# =============================================================================
# RGB IMAGES
# =============================================================================

def load_image(path):
    """Read a P6 PPM or a PNG as an H x W x 3 uint8 array"""
    with open(path, "rb") as f:
        blob = f.read()
    if blob.startswith(PNG_SIGNATURE):
        try:
            with Image.open(path) as im:
                return np.array(im.convert("RGB"), dtype=np.uint8)
        except (UnidentifiedImageError, OSError) as e:
            raise ParseError(f"{path}: unreadable PNG: {e}", offset=0)
    if blob.startswith(b"P6"):
        return _read_ppm(blob, path)
    raise ParseError(f"{path}: not a P6 PPM or PNG file", offset=0)


def save_ppm(img, path):
    img = np.ascontiguousarray(img, dtype=np.uint8)
    height, width = img.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        f.write(img.tobytes())


def save_image(img, path):
    """Write PPM or PNG depending on the extension"""
    ext = os.path.splitext(path)[1].lower()
    if ext == ".ppm":
        save_ppm(img, path)
    elif ext == ".png":
        Image.fromarray(np.ascontiguousarray(img, dtype=np.uint8)).save(path, format="PNG")
    else:
        raise ConfigurationError(f"{path}: output image must be .ppm or .png")


def boundary_mask(labels):
    """True where a 4-neighbor carries a different label"""
    labels = np.asarray(labels)
    mask = np.zeros(labels.shape, dtype=bool)
    horizontal = labels[:, 1:] != labels[:, :-1]
    vertical = labels[1:, :] != labels[:-1, :]
    mask[:, 1:] |= horizontal
    mask[:, :-1] |= horizontal
    mask[1:, :] |= vertical
    mask[:-1, :] |= vertical
    return mask


def save_overlay(image, labels, path, color=OVERLAY_COLOR):
    overlay = np.array(image, dtype=np.uint8, copy=True)
    overlay[boundary_mask(labels)] = hex_to_rgb(color)
    save_image(overlay, path)


# =============================================================================
# LABEL MAPS
# =============================================================================

def save_label_pgm(labels, path, k_actual):
    """
    ASCII P2 label map with maxval k_actual - 1

    PGM forbids maxval 0, so a single-superpixel map is written with maxval 1.
    """
    labels = np.asarray(labels, dtype=np.int64)
    height, width = labels.shape
    maxval = max(1, int(k_actual) - 1)
    lines = [f"P2\n{width} {height}\n{maxval}"]
    lines.extend(" ".join(str(v) for v in row) for row in labels)
    with open(path, "w", encoding="ascii", newline="\n") as f:
        f.write("\n".join(lines) + "\n")


def load_label_pgm(path):
    """Read a P2 or P5 PGM as an H x W int64 label map"""
    with open(path, "rb") as f:
        blob = f.read()
    reader = _NetpbmReader(blob, path)
    magic, width, height, maxval = reader.header([b"P2", b"P5"])
    count = width * height
    if magic == b"P5":
        data = _read_raster(reader, count, maxval)
    else:
        values = []
        for _ in range(count):
            value, at = reader.integer("label value")
            if value > maxval:
                reader.fail(f"label {value} exceeds maxval {maxval}", offset=at)
            values.append(value)
        data = np.array(values, dtype=np.int64)
    return data.reshape(height, width)
