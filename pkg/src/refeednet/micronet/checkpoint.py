"""Checkpoint serialization.

Layout: magic `RFN1`, a little-endian u32 header length, the header as
canonical JSON (architecture, class count, base boundary, seed), parameters
as little-endian float64 in layer order (weight then bias per layer), and a
trailing u32 CRC-32 of everything between the magic and the CRC.
"""

import json
import struct
import zlib

import numpy as np

from ..errors import CheckpointFormatError
from .layers import layer_from_description
from .model import MicroCnn

MAGIC = b"RFN1"
_F8 = np.dtype("<f8")


def _canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()


def save_checkpoint(model) -> bytes:
    header = _canonical_json(model.describe())
    params = bytearray()
    for _, layer in model.parameter_layers():
        params += np.ascontiguousarray(layer.weight, dtype=_F8).tobytes()
        params += np.ascontiguousarray(layer.bias, dtype=_F8).tobytes()
    payload = struct.pack("<I", len(header)) + header + bytes(params)
    return MAGIC + payload + struct.pack("<I", zlib.crc32(payload))


def load_checkpoint(data: bytes) -> MicroCnn:
    if len(data) < 12:
        raise CheckpointFormatError("stream too short to be a checkpoint", offset=len(data))
    if data[:4] != MAGIC:
        raise CheckpointFormatError(f"bad magic {data[:4]!r}", offset=0)
    payload = data[4:-4]
    (stored_crc,) = struct.unpack("<I", data[-4:])
    actual_crc = zlib.crc32(payload)
    if stored_crc != actual_crc:
        raise CheckpointFormatError(
            f"CRC mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}",
            offset=len(data) - 4,
        )
    (header_len,) = struct.unpack("<I", payload[:4])
    header_end = 8 + header_len
    if header_end > len(data) - 4:
        raise CheckpointFormatError("header extends past end of stream", offset=4)
    try:
        header = json.loads(data[8:header_end].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f"unparseable header: {exc}", offset=8) from None

    try:
        layers = [layer_from_description(d) for d in header["layers"]]
        input_shape = tuple(header["input_shape"])
        class_count = header["class_count"]
        base_boundary = header["base_boundary"]
        seed = header["seed"]
    except KeyError as exc:
        raise CheckpointFormatError(f"header missing field {exc}", offset=8) from None

    # rebuild shapes to size the parameter buffers
    h, w, c = input_shape
    shape = (c, h, w)
    offset = header_end
    raw = data[:-4]
    for layer in layers:
        if layer.kind == "Conv2D":
            ci = shape[0]
            kh, kw = layer.kernel
            wshape, bshape = (layer.out_channels, ci, kh, kw), (layer.out_channels,)
        elif layer.kind == "Dense":
            wshape, bshape = (shape[0], layer.out_features), (layer.out_features,)
        else:
            shape = layer.out_shape(shape)
            continue
        shape = layer.out_shape(shape)
        for name, pshape in (("weight", wshape), ("bias", bshape)):
            nbytes = int(np.prod(pshape)) * 8
            if offset + nbytes > len(raw):
                raise CheckpointFormatError(
                    f"parameter block for {layer.kind}.{name} truncated", offset=offset
                )
            arr = np.frombuffer(raw, dtype=_F8, count=int(np.prod(pshape)),
                                offset=offset).reshape(pshape).copy()
            setattr(layer, name, arr)
            offset += nbytes
    if offset != len(raw):
        raise CheckpointFormatError(
            f"{len(raw) - offset} unexpected trailing parameter bytes", offset=offset
        )
    return MicroCnn(layers, base_boundary, input_shape, class_count, seed)


def save_checkpoint_file(model, path):
    blob = save_checkpoint(model)
    with open(path, "wb") as fh:
        fh.write(blob)
    return blob


def load_checkpoint_file(path):
    with open(path, "rb") as fh:
        return load_checkpoint(fh.read())


def checkpoint_checksum(data: bytes) -> str:
    """Stable content id for a serialized checkpoint."""
    return f"{zlib.crc32(data):08x}"
