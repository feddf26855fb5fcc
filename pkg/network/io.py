"""
PFM depth maps.

    Pf\\n
    <width> <height>\\n
    -1.0\\n                 negative scale: little-endian
    <float32 rows, bottom row first>

Invalid pixels are written as 0, so ``depth > 0`` recovers the mask.
"""

from __future__ import annotations

from pathlib import Path
from typing import Union

import numpy as np

from dto.depth import DepthMap
from errors import FormatError

PathLike = Union[str, Path]


def encode_pfm(depth: DepthMap) -> bytes:
    data = depth.masked()
    H, W = data.shape
    header = f"Pf\n{W} {H}\n-1.0\n".encode("ascii")
    return header + np.flipud(data).astype("<f4").tobytes()


def save_depth(depth: DepthMap, path: PathLike) -> None:
    Path(path).write_bytes(encode_pfm(depth))


def decode_pfm(data: bytes, source: str = "<pfm>") -> DepthMap:
    lines = data.split(b"\n", 3)
    if len(lines) < 4:
        raise FormatError(f"{source}: truncated PFM header")
    magic, dims, scale_line, body = lines
    if magic.strip() == b"PF":
        raise FormatError(f"{source}: colour PFM (PF) is not a depth map")
    if magic.strip() != b"Pf":
        raise FormatError(f"{source}: not a PFM file (magic {magic[:4]!r})")
    try:
        W, H = (int(tok) for tok in dims.split())
    except ValueError:
        raise FormatError(f"{source}: bad PFM dimensions line {dims!r}") from None
    if W < 1 or H < 1:
        raise FormatError(f"{source}: non-positive PFM extents {W}x{H}")
    try:
        scale = float(scale_line.strip())
    except ValueError:
        raise FormatError(f"{source}: bad PFM scale line {scale_line!r}") from None
    if scale == 0 or not np.isfinite(scale):
        raise FormatError(f"{source}: bad PFM scale {scale!r}")
    dtype = "<f4" if scale < 0 else ">f4"
    expected = W * H * 4
    if len(body) < expected:
        raise FormatError(f"{source}: PFM payload has {len(body)} bytes, expected {expected}")
    values = np.frombuffer(body[:expected], dtype=dtype).reshape(H, W)
    depth = np.flipud(values).astype(np.float32)
    if not np.all(np.isfinite(depth)):
        raise FormatError(f"{source}: non-finite depth values")
    return DepthMap(depth=depth)


def load_depth(path: PathLike) -> DepthMap:
    path = Path(path)
    return decode_pfm(path.read_bytes(), str(path))
