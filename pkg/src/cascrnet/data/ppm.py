"""Binary PPM (P6, maxval 255) decoding and encoding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import FormatError

_WS = b" \t\n\r\x0b\x0c"


@dataclass(frozen=True)
class ImageBuffer:
    width: int
    height: int
    pixels: np.ndarray  # uint8, height x width x 3

    def to_chw(self, dtype=np.float32) -> np.ndarray:
        return self.pixels.transpose(2, 0, 1).astype(dtype)


def _next_token(buf: bytes, pos: int, what: str) -> tuple[bytes, int]:
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c == b"#":
            end = buf.find(b"\n", pos)
            pos = n if end < 0 else end + 1
        elif c in _WS:
            pos += 1
        else:
            break
    start = pos
    while pos < n and buf[pos:pos + 1] not in _WS and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError(f"missing {what} in PPM header", start)
    return buf[start:pos], pos


def _int_token(buf: bytes, pos: int, what: str) -> tuple[int, int]:
    tok, end = _next_token(buf, pos, what)
    if not tok.isdigit():
        raise FormatError(f"PPM {what} is not a decimal integer: {tok!r}", end - len(tok))
    return int(tok), end


def decode_ppm(buf: bytes) -> ImageBuffer:
    if buf[:2] != b"P6":
        raise FormatError(f"bad PPM magic {bytes(buf[:2])!r}, expected b'P6'", 0)
    width, pos = _int_token(buf, 2, "width")
    height, pos = _int_token(buf, pos, "height")
    maxval, pos = _int_token(buf, pos, "maxval")
    if maxval != 255:
        raise FormatError(f"PPM maxval must be 255, got {maxval}", pos - len(str(maxval)))
    if width < 1 or height < 1:
        raise FormatError(f"PPM size must be positive, got {width}x{height}", pos)
    if pos >= len(buf) or buf[pos:pos + 1] not in _WS:
        raise FormatError("expected a single whitespace byte before PPM payload", pos)
    header_len = pos + 1
    need = width * height * 3
    have = len(buf) - header_len
    if have < need:
        raise FormatError(f"truncated PPM payload: need {need} bytes, found {have}", len(buf))
    pixels = np.frombuffer(buf, dtype=np.uint8, count=need, offset=header_len).reshape(height, width, 3)
    return ImageBuffer(width, height, pixels.copy())


def encode_ppm(pixels: np.ndarray) -> bytes:
    """``pixels`` is an H x W x 3 uint8 array."""
    arr = np.ascontiguousarray(pixels, dtype=np.uint8)
    h, w, c = arr.shape
    if c != 3:
        raise ValueError(f"PPM needs 3 channels, got {c}")
    return f"P6\n{w} {h}\n255\n".encode("ascii") + arr.tobytes()
