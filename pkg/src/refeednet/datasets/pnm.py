"""Native portable graymap/pixmap (P5/P6) reading and writing, plus a
minimal PNG encoder for serving images to browsers.

Only 8-bit binary PNM (maxval <= 255) is supported.
"""

import struct
import zlib

import numpy as np

from ..errors import IoError


def _read_header_tokens(data, count):
    """Read `count` whitespace-separated tokens after the magic, honoring
    '#' comments. Returns (tokens, offset_of_raster)."""
    tokens = []
    i = 2  # past the 2-byte magic
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i:i + 1] == b"#":
            while i < n and data[i] not in (0x0A, 0x0D):
                i += 1
            continue
        start = i
        while i < n and not data[i:i + 1].isspace():
            i += 1
        if start == i:
            raise IoError("truncated PNM header")
        tokens.append(data[start:i])
    # exactly one whitespace byte separates header from raster
    if i >= n:
        raise IoError("truncated PNM header")
    return tokens, i + 1


def decode_pnm(data):
    """Decode P5/P6 bytes into an (H, W, C) float64 array in [0, 1]."""
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise IoError(f"not a binary PNM file (magic {magic!r})")
    channels = 1 if magic == b"P5" else 3
    tokens, offset = _read_header_tokens(data, 3)
    try:
        w, h, maxval = (int(t) for t in tokens)
    except ValueError:
        raise IoError("malformed PNM header") from None
    if maxval <= 0 or maxval > 255:
        raise IoError(f"unsupported PNM maxval {maxval} (only 8-bit supported)")
    need = w * h * channels
    raster = data[offset:offset + need]
    if len(raster) < need:
        raise IoError(f"PNM raster truncated: need {need} bytes, have {len(raster)}")
    arr = np.frombuffer(raster, dtype=np.uint8, count=need).reshape(h, w, channels)
    return arr.astype(np.float64) / maxval


def encode_pnm(pixels):
    """Encode (H, W, C) floats in [0, 1] as P5 (C=1) or P6 (C=3) bytes."""
    px = np.asarray(pixels, dtype=np.float64)
    if px.ndim == 2:
        px = px[:, :, None]
    h, w, c = px.shape
    if c not in (1, 3):
        raise IoError(f"cannot encode {c}-channel image as PNM")
    magic = b"P5" if c == 1 else b"P6"
    raster = np.rint(np.clip(px, 0.0, 1.0) * 255).astype(np.uint8)
    return magic + f"\n{w} {h}\n255\n".encode() + raster.tobytes()


def load_pnm(path):
    with open(path, "rb") as fh:
        return decode_pnm(fh.read())


def save_pnm(pixels, path):
    with open(path, "wb") as fh:
        fh.write(encode_pnm(pixels))


def encode_png(pixels):
    """Encode (H, W, C) floats in [0, 1] as an 8-bit PNG (gray or RGB)."""
    px = np.asarray(pixels, dtype=np.float64)
    if px.ndim == 2:
        px = px[:, :, None]
    h, w, c = px.shape
    if c not in (1, 3):
        raise IoError(f"cannot encode {c}-channel image as PNG")
    raster = np.rint(np.clip(px, 0.0, 1.0) * 255).astype(np.uint8)
    color_type = 0 if c == 1 else 2
    # each scanline is prefixed with filter byte 0 (no filtering)
    raw = b"".join(b"\x00" + raster[row].tobytes() for row in range(h))

    def chunk(tag, payload):
        data = tag + payload
        return struct.pack(">I", len(payload)) + data + struct.pack(">I", zlib.crc32(data))

    ihdr = struct.pack(">IIBBBBB", w, h, 8, color_type, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n"
            + chunk(b"IHDR", ihdr)
            + chunk(b"IDAT", zlib.compress(raw, 9))
            + chunk(b"IEND", b""))
