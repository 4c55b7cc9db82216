"""RSCK checkpoint files: named float32 arrays behind a JSON header."""
import json
import struct

import numpy as np

RSCK_MAGIC = b"RSCK"
RSCK_VERSION = 1


def save_checkpoint(path, arrays: dict):
    """Write ``{name: array}`` in insertion order."""
    header = json.dumps(
        [{"name": k, "shape": list(np.shape(v))} for k, v in arrays.items()],
        separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(RSCK_MAGIC + struct.pack("<II", RSCK_VERSION, len(header)) + header)
        for v in arrays.values():
            fh.write(np.ascontiguousarray(v, dtype="<f4").tobytes())


def load_checkpoint(path) -> dict:
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12 or head[:4] != RSCK_MAGIC:
            raise ValueError(f"{path}: not an RSCK checkpoint")
        version, hlen = struct.unpack("<II", head[4:])
        if version != RSCK_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        entries = json.loads(fh.read(hlen))
        out = {}
        for e in entries:
            shape = tuple(e["shape"])
            n = int(np.prod(shape)) if shape else 1
            buf = fh.read(4 * n)
            if len(buf) != 4 * n:
                raise ValueError(f"{path}: truncated data for {e['name']}")
            out[e["name"]] = np.frombuffer(buf, dtype="<f4").astype(np.float32).reshape(shape)
    return out
