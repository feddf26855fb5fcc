"""
Calibration and point-cloud files.

calib.txt     ``key=value`` lines: fx, fy, cx, cy, baseline, width, height
PCB1          b"PCB1", u32 little-endian N, then N x 3 little-endian f32
.xyz          one ``x y z`` triple per line
"""

from __future__ import annotations

import logging
import struct
from pathlib import Path
from typing import Dict, Union

import numpy as np
from pydantic import ValidationError

from dto.camera import CameraRig
from dto.point_cloud import PointCloud
from errors import CalibrationError, FormatError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

_CALIB_KEYS = ("fx", "fy", "cx", "cy", "baseline", "width", "height")
_POSITIVE_KEYS = ("fx", "fy", "baseline")
PCB_MAGIC = b"PCB1"


# -------------------------------------------------------------------
# Calibration
# -------------------------------------------------------------------


def save_calibration(rig: CameraRig, path: PathLike) -> None:
    values = {
        "fx": repr(float(rig.fx)),
        "fy": repr(float(rig.fy)),
        "cx": repr(float(rig.cx)),
        "cy": repr(float(rig.cy)),
        "baseline": repr(float(rig.baseline)),
        "width": str(rig.image_width),
        "height": str(rig.image_height),
    }
    text = "".join(f"{key}={values[key]}\n" for key in _CALIB_KEYS)
    Path(path).write_text(text, encoding="utf-8")


def parse_calibration(text: str, source: str = "<calib>") -> CameraRig:
    entries: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CalibrationError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        entries[key] = value

    for key in _CALIB_KEYS:
        if key not in entries:
            raise CalibrationError(f"missing key: {key}", key=key)

    numbers: Dict[str, float] = {}
    for key in _CALIB_KEYS:
        try:
            numbers[key] = float(entries[key])
        except ValueError:
            raise CalibrationError(
                f"{key}: not a number ({entries[key]!r})", key=key
            ) from None
    for key in _POSITIVE_KEYS:
        if not numbers[key] > 0:
            raise CalibrationError(f"{key} must be positive, got {entries[key]}", key=key)
    for key in ("width", "height"):
        if numbers[key] != int(numbers[key]) or numbers[key] < 1:
            raise CalibrationError(f"{key} must be a positive integer, got {entries[key]}", key=key)

    try:
        return CameraRig(
            fx=numbers["fx"],
            fy=numbers["fy"],
            cx=numbers["cx"],
            cy=numbers["cy"],
            baseline=numbers["baseline"],
            image_width=int(numbers["width"]),
            image_height=int(numbers["height"]),
        )
    except ValidationError as exc:
        raise CalibrationError(f"{source}: {exc.errors()[0]['msg']}") from exc


def load_calibration(path: PathLike) -> CameraRig:
    return parse_calibration(Path(path).read_text(encoding="utf-8"), source=str(path))


# -------------------------------------------------------------------
# Point clouds
# -------------------------------------------------------------------


def _keep_in_front(xyz: np.ndarray, source: str) -> PointCloud:
    if not np.all(np.isfinite(xyz)):
        raise FormatError(f"{source}: non-finite point coordinates")
    front = xyz[:, 2] > 0
    dropped = int((~front).sum())
    if dropped:
        logger.warning("%s: dropped %d point(s) at or behind the camera", source, dropped)
    return PointCloud(xyz=xyz[front])


def save_points(cloud: PointCloud, path: PathLike) -> None:
    """Write PCB1, or ``.xyz`` text when the suffix says so."""
    path = Path(path)
    xyz = np.ascontiguousarray(cloud.xyz, dtype="<f4")
    if path.suffix == ".xyz":
        lines = [f"{x!r} {y!r} {z!r}" for x, y, z in xyz.astype(float).tolist()]
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return
    path.write_bytes(PCB_MAGIC + struct.pack("<I", xyz.shape[0]) + xyz.tobytes())


def load_points(path: PathLike) -> PointCloud:
    """Read PCB1 or ``.xyz``; points with z <= 0 are dropped and logged."""
    path = Path(path)
    data = path.read_bytes()
    if data[:4] == PCB_MAGIC:
        if len(data) < 8:
            raise FormatError(f"{path}: truncated PCB1 header")
        (count,) = struct.unpack_from("<I", data, 4)
        expected = 8 + 12 * count
        if len(data) != expected:
            raise FormatError(
                f"{path}: PCB1 declares {count} point(s) ({expected} bytes), file has {len(data)}"
            )
        xyz = np.frombuffer(data, dtype="<f4", offset=8).reshape(count, 3).astype(np.float32)
        return _keep_in_front(xyz, str(path))

    if path.suffix != ".xyz":
        raise FormatError(f"{path}: neither PCB1 (bad magic {data[:4]!r}) nor .xyz text")
    rows = []
    for lineno, raw in enumerate(data.decode("utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(f"{path}:{lineno}: expected 'x y z', got {line!r}")
        try:
            rows.append([float(c) for c in parts])
        except ValueError:
            raise FormatError(f"{path}:{lineno}: not a number in {line!r}") from None
    xyz = np.asarray(rows, dtype=np.float32).reshape(-1, 3)
    return _keep_in_front(xyz, str(path))
