"""
VPN1 checkpoint format.

    magic       b"VPN1"
    per parameter, in ParameterSet order:
      u16       name length (little-endian)
      bytes     UTF-8 name
      u8        rank
      u32 x rank extents (little-endian)
      f32 x N   row-major values (little-endian)

Optimizer moments are not stored.
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Dict, Union

import numpy as np

from core.parameters import ParameterSet
from errors import FormatError

logger = logging.getLogger(__name__)

MAGIC = b"VPN1"


def save_checkpoint(params: ParameterSet, path: Union[str, Path]) -> None:
    chunks = [MAGIC]
    for p in params:
        name = p.name.encode("utf-8")
        chunks.append(struct.pack("<H", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<B", p.value.ndim))
        chunks.append(struct.pack(f"<{p.value.ndim}I", *p.value.shape))
        chunks.append(np.ascontiguousarray(p.value, dtype="<f4").tobytes())
    Path(path).write_bytes(b"".join(chunks))
    logger.info("Checkpoint written to %s (%d parameter(s))", path, len(params))


def read_checkpoint(path: Union[str, Path]) -> Dict[str, np.ndarray]:
    """Parse a VPN1 file into name -> float32 array, in file order."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: not a VPN1 checkpoint (magic {data[:4]!r})")
    out: Dict[str, np.ndarray] = {}
    pos = 4
    try:
        while pos < len(data):
            (name_len,) = struct.unpack_from("<H", data, pos)
            pos += 2
            name = data[pos : pos + name_len].decode("utf-8")
            pos += name_len
            (rank,) = struct.unpack_from("<B", data, pos)
            pos += 1
            shape = struct.unpack_from(f"<{rank}I", data, pos)
            pos += 4 * rank
            count = int(np.prod(shape)) if rank else 1
            if pos + 4 * count > len(data):
                raise FormatError(f"{path}: truncated values for parameter {name!r}")
            values = np.frombuffer(data, dtype="<f4", count=count, offset=pos)
            pos += 4 * count
            out[name] = values.reshape(shape).astype(np.float32)
    except (struct.error, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: corrupt VPN1 checkpoint ({exc})") from exc
    return out


def load_checkpoint(params: ParameterSet, path: Union[str, Path]) -> ParameterSet:
    """Overwrite *params* in place; names and shapes must match exactly."""
    stored = read_checkpoint(path)
    missing = [name for name in params.names if name not in stored]
    extra = [name for name in stored if name not in params]
    if missing or extra:
        raise FormatError(
            f"{path}: parameter names differ from the model "
            f"(missing {missing[:3]}, unexpected {extra[:3]})"
        )
    for p in params:
        value = stored[p.name]
        if value.shape != p.shape:
            raise FormatError(
                f"{path}: parameter {p.name!r} has shape {value.shape}, model expects {p.shape}"
            )
        p.value = value.astype(p.value.dtype)
    logger.info("Checkpoint loaded from %s (%d parameter(s))", path, len(params))
    return params
