"""Versioned binary checkpoint format for named float64 tensors.

Layout: magic ``NTK1``, tensor count (u32), then per tensor a u16 name
length, the UTF-8 name, a u8 rank, u32 dims, and the raw little-endian
float64 payload in row-major order. Writing is byte-deterministic for a
given mapping, so identical training runs produce identical files.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"NTK1"


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, tensors: dict[str, np.ndarray]) -> None:
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", len(tensors))
    for name, array in tensors.items():
        array = np.ascontiguousarray(array, dtype=np.float64)
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded))
        blob += encoded
        blob += struct.pack("<B", array.ndim)
        blob += struct.pack(f"<{array.ndim}I", *array.shape)
        blob += array.astype("<f8").tobytes()
    Path(path).write_bytes(bytes(blob))


def load_checkpoint(path) -> dict[str, np.ndarray]:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {data[:4]!r}")
    offset = 4
    (count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset:offset + name_len].decode("utf-8")
        offset += name_len
        (rank,) = struct.unpack_from("<B", data, offset)
        offset += 1
        shape = struct.unpack_from(f"<{rank}I", data, offset)
        offset += 4 * rank
        n_bytes = int(np.prod(shape, dtype=np.int64)) * 8 if rank else 8
        payload = data[offset:offset + n_bytes]
        if len(payload) != n_bytes:
            raise CheckpointError(f"{path}: truncated payload for {name!r}")
        offset += n_bytes
        tensors[name] = np.frombuffer(payload, dtype="<f8").reshape(shape).copy()
    if offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - offset} trailing bytes")
    return tensors
