"""Writer for the binary embedding interchange format.

Layout (all integers little-endian):
    magic "XEMB" | u32 version=1 | u32 dim | u32 count
    then per record: u16 id-length | id utf-8 bytes | dim float32 values
"""

from __future__ import annotations

import os
import struct
from pathlib import Path
from typing import Iterable

import numpy as np

MAGIC = b"XEMB"
VERSION = 1


class XembWriteError(Exception):
    """Raised when records cannot be encoded in the container format."""


def write_xemb(
    records: Iterable[tuple[str, np.ndarray]], path: str | Path, dim: int
) -> int:
    """Write (id, vector) records; returns the record count.

    The file is written to a temp sibling and renamed into place so a
    crash never leaves a truncated container behind.
    """
    path = Path(path)
    items = list(records)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, dim, len(items)))
        for doc_id, vec in items:
            raw = doc_id.encode("utf-8")
            if not 0 < len(raw) <= 0xFFFF:
                raise XembWriteError(f"id {doc_id!r} does not fit a u16 length")
            arr = np.asarray(vec, dtype=np.float32)
            if arr.shape != (dim,):
                raise XembWriteError(
                    f"id {doc_id!r}: vector shape {arr.shape} != ({dim},)"
                )
            if not np.all(np.isfinite(arr)):
                raise XembWriteError(f"id {doc_id!r}: non-finite values")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(arr.tobytes())
    os.replace(tmp, path)
    return len(items)
