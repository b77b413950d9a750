"""Binary weight-bundle interchange format.

Layout: magic string, a length-prefixed JSON manifest naming layers,
shapes and byte offsets, a little-endian float64 payload, and a trailing
CRC32 over everything before it.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ..errors import FormatError

MAGIC = b"VNWB0001"


def save_weights(weights: dict, path) -> None:
    names = sorted(weights)
    payload = bytearray()
    manifest = []
    for name in names:
        arr = np.ascontiguousarray(np.asarray(weights[name], dtype=np.float64))
        manifest.append(
            {"name": name, "shape": list(arr.shape), "offset": len(payload)}
        )
        payload += arr.astype("<f8").tobytes()
    header = json.dumps({"layers": manifest}).encode("utf-8")
    blob = MAGIC + struct.pack("<I", len(header)) + header + bytes(payload)
    blob += struct.pack("<I", zlib.crc32(blob) & 0xFFFFFFFF)
    Path(path).write_bytes(blob)


def load_weights(path) -> dict:
    data = Path(path).read_bytes()
    if len(data) < len(MAGIC) + 8:
        raise FormatError("weight bundle truncated", offset=len(data))
    if not data.startswith(MAGIC):
        raise FormatError("bad weight-bundle magic", offset=0)
    (crc_stored,) = struct.unpack_from("<I", data, len(data) - 4)
    if zlib.crc32(data[:-4]) & 0xFFFFFFFF != crc_stored:
        raise FormatError("weight bundle checksum mismatch", offset=len(data) - 4)
    (hlen,) = struct.unpack_from("<I", data, len(MAGIC))
    hstart = len(MAGIC) + 4
    try:
        manifest = json.loads(data[hstart : hstart + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise FormatError("weight bundle manifest unreadable", offset=hstart) from None
    payload = data[hstart + hlen : -4]
    out = {}
    for entry in manifest.get("layers", []):
        name = entry["name"]
        shape = tuple(int(s) for s in entry["shape"])
        offset = int(entry["offset"])
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(payload):
            raise FormatError(
                f"weight bundle payload too short for layer {name!r}", offset=hstart + hlen + offset
            )
        out[name] = np.frombuffer(payload[offset:end], dtype="<f8").reshape(shape).copy()
    return out
