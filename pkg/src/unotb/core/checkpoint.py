"""Binary checkpoint format.

Layout: the 6-byte magic ``b"UNOTB1"`` followed by zero or more records,
read until end of file. Each record is

====================  =========================================
``uint32``            name length in bytes
``bytes``             UTF-8 name
``uint32``            rank
``uint64 * rank``     dimensions
``float64 * prod``    row-major payload
====================  =========================================

All integers and floats are little-endian.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Mapping

import numpy as np

MAGIC = b"UNOTB1"


def dumps(tensors: Mapping[str, np.ndarray]) -> bytes:
    parts = [MAGIC]
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype="<f8")  # keeps rank 0; tobytes is C order
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        parts.append(arr.tobytes())
    return b"".join(parts)


def loads(buf: bytes) -> dict[str, np.ndarray]:
    if buf[: len(MAGIC)] != MAGIC:
        raise ValueError("not a UNOTB1 checkpoint (bad magic)")
    out: dict[str, np.ndarray] = {}
    pos = len(MAGIC)
    try:
        while pos < len(buf):
            (n,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            name = buf[pos : pos + n].decode("utf-8")
            pos += n
            (rank,) = struct.unpack_from("<I", buf, pos)
            pos += 4
            dims = struct.unpack_from(f"<{rank}Q", buf, pos)
            pos += 8 * rank
            count = int(np.prod(dims, dtype=np.int64))
            if pos + 8 * count > len(buf):
                raise ValueError(f"truncated payload for tensor {name!r}")
            out[name] = np.frombuffer(buf, dtype="<f8", count=count, offset=pos).reshape(dims).astype(np.float64)
            pos += 8 * count
    except struct.error as exc:
        raise ValueError(f"truncated checkpoint at byte {pos}") from exc
    return out


def save(path: str | Path, tensors: Mapping[str, np.ndarray]) -> None:
    Path(path).write_bytes(dumps(tensors))


def load(path: str | Path) -> dict[str, np.ndarray]:
    return loads(Path(path).read_bytes())
