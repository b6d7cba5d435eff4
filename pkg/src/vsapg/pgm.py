"""Binary (P5) 8-bit PGM reading and writing.

Pixel values map linearly between [0, 1] and [0, 255]; writing rounds
half away from zero after clipping.
"""

import re

import numpy as np

__all__ = ["read_pgm", "write_pgm", "to_bytes", "from_bytes", "PGMError"]


class PGMError(ValueError):
    pass


_TOKEN = re.compile(rb"\s*(?:#[^\n]*\n\s*)*(\S+)")


def _header_tokens(data, count):
    pos = 0
    out = []
    for _ in range(count):
        m = _TOKEN.match(data, pos)
        if m is None:
            raise PGMError("truncated PGM header")
        out.append(m.group(1))
        pos = m.end()
    return out, pos


def from_bytes(data):
    """Decode a P5 file image into a float array in [0, 1]."""
    (magic, w, h, maxval), pos = _header_tokens(data, 4)
    if magic != b"P5":
        raise PGMError(f"not a binary PGM (magic {magic!r})")
    try:
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise PGMError(f"bad PGM header field: {exc}") from None
    if w <= 0 or h <= 0:
        raise PGMError(f"bad PGM dimensions {w}x{h}")
    if maxval != 255:
        raise PGMError(f"only 8-bit PGM (maxval 255) is supported, got {maxval}")
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise PGMError("missing whitespace after maxval")
    raster = data[pos + 1:pos + 1 + w * h]
    if len(raster) != w * h:
        raise PGMError(f"raster has {len(raster)} bytes, expected {w * h}")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(h, w)
    return img.astype(float) / 255.0


def to_bytes(img):
    """Encode a 2-D array with values in [0, 1] as a P5 file image."""
    img = np.asarray(img, dtype=float)
    if img.ndim != 2:
        raise PGMError(f"expected a 2-D grayscale image, got shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise PGMError("image contains non-finite values")
    scaled = np.clip(img, 0.0, 1.0) * 255.0
    q = np.floor(scaled + 0.5).astype(np.uint8)  # nonnegative: half away from zero
    h, w = img.shape
    return b"P5\n%d %d\n255\n" % (w, h) + q.tobytes()


def read_pgm(path):
    with open(path, "rb") as fh:
        return from_bytes(fh.read())


def write_pgm(path, img):
    data = to_bytes(img)
    with open(path, "wb") as fh:
        fh.write(data)
