"""Binary PNM image I/O: P6 (RGB) and P5 (grayscale), maxval 255 only.

Files this module writes read back bit-exactly; the reader additionally
tolerates standard header comments and trailing whitespace.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .preprocess import Frame

_WHITESPACE = b" \t\n\r\x0b\x0c"


def _next_token(buf: bytes, pos: int, path: str) -> tuple[bytes, int]:
    while pos < len(buf):
        if buf[pos] in _WHITESPACE:
            pos += 1
        elif buf[pos:pos + 1] == b"#":
            while pos < len(buf) and buf[pos] not in b"\r\n":
                pos += 1
        else:
            break
    if pos >= len(buf):
        raise InputError(f"{path}: truncated header")
    start = pos
    while pos < len(buf) and buf[pos] not in _WHITESPACE:
        pos += 1
    return buf[start:pos], pos


def read_ppm_bytes(buf: bytes, path: str = "<bytes>") -> Frame:
    magic, pos = _next_token(buf, 0, path)
    if magic == b"P6":
        channels = 3
    elif magic == b"P5":
        channels = 1
    else:
        raise InputError(f"{path}: not a binary PPM/PGM (magic {magic!r})")
    fields = []
    for _ in range(3):
        token, pos = _next_token(buf, pos, path)
        try:
            fields.append(int(token))
        except ValueError as exc:
            raise InputError(f"{path}: non-numeric header field {token!r}") from exc
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise InputError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise InputError(f"{path}: unsupported maxval {maxval} (only 255)")
    # exactly one whitespace byte separates the header from the raster
    if pos >= len(buf) or buf[pos] not in _WHITESPACE:
        raise InputError(f"{path}: malformed header/raster separator")
    pos += 1
    n = width * height * channels
    data = buf[pos:pos + n]
    if len(data) < n:
        raise InputError(f"{path}: truncated raster ({len(data)} of {n} bytes)")
    if buf[pos + n:].strip(_WHITESPACE):
        raise InputError(f"{path}: trailing bytes after raster")
    pixels = np.frombuffer(data, dtype=np.uint8).reshape(height, width, channels)
    return Frame(pixels.copy())


def read_ppm(path: str) -> Frame:
    try:
        with open(path, "rb") as fh:
            buf = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    return read_ppm_bytes(buf, path)


def write_ppm_bytes(frame: Frame) -> bytes:
    if frame.channels == 3:
        magic = b"P6"
    elif frame.channels == 1:
        magic = b"P5"
    else:
        raise InputError(f"cannot write a {frame.channels}-channel frame as PPM/PGM")
    header = magic + b"\n%d %d\n255\n" % (frame.width, frame.height)
    return header + frame.data.tobytes()


def write_ppm(path: str, frame: Frame) -> None:
    try:
        with open(path, "wb") as fh:
            fh.write(write_ppm_bytes(frame))
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
