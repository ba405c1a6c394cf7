"""CTEN: a minimal little-endian tensor file.

Layout: ``b"CTEN"``, version byte (1), dtype byte (0 = float32, 1 = float64),
ndim byte, ndim uint32 extents, then the row-major payload.
"""

from __future__ import annotations

import os
import struct

import numpy as np

from ..errors import FormatError
from ..fileio import atomic_write_bytes
from ..nn import Tensor

MAGIC = b"CTEN"
VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


def encode_cten(t: Tensor | np.ndarray) -> bytes:
    arr = t.data if isinstance(t, Tensor) else np.asarray(t)
    code = _CODES.get(arr.dtype)
    if code is None:
        raise ValueError(f"CTEN stores float32 or float64, not {arr.dtype}")
    if arr.ndim > 255:
        raise ValueError("CTEN supports at most 255 dimensions")
    header = MAGIC + bytes([VERSION, code, arr.ndim]) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + np.ascontiguousarray(arr, dtype=_DTYPES[code]).tobytes()


def decode_cten(buf: bytes, path: str | None = None) -> Tensor:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise FormatError(f"bad magic {bytes(buf[:4])!r}, expected {MAGIC!r}", 0, path)
    if len(buf) < 7:
        raise FormatError("truncated header", len(buf), path)
    if buf[4] != VERSION:
        raise FormatError(f"unsupported version {buf[4]}", 4, path)
    dtype = _DTYPES.get(buf[5])
    if dtype is None:
        raise FormatError(f"unknown dtype code {buf[5]}", 5, path)
    ndim = buf[6]
    header_len = 7 + 4 * ndim
    if len(buf) < header_len:
        raise FormatError(f"truncated extents: need {ndim} uint32 values", len(buf), path)
    shape = struct.unpack_from(f"<{ndim}I", buf, 7)
    expected = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    actual = len(buf) - header_len
    if actual != expected:
        raise FormatError(
            f"payload length mismatch: extents {'x'.join(map(str, shape)) or 'scalar'} need {expected} bytes, found {actual}",
            header_len + min(actual, expected),
            path,
        )
    arr = np.frombuffer(buf, dtype=dtype, offset=header_len).reshape(shape)
    return Tensor(arr.astype(dtype.newbyteorder("="), copy=True))


def write_cten(path: str | os.PathLike, t: Tensor | np.ndarray) -> None:
    atomic_write_bytes(path, encode_cten(t))


def read_cten(path: str | os.PathLike) -> Tensor:
    with open(path, "rb") as fh:
        return decode_cten(fh.read(), str(path))
