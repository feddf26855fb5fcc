"""
Pinhole projection for the rectified stereo rig.

Scalar helpers (``project``, ``backproject``, ``project_right``) follow the
textbook form ``u = fx * x / z + cx``; ``project_points`` and
``backproject_pixels`` are the vectorized equivalents used on whole clouds
and depth maps.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

from dto.camera import CameraRig
from errors import ProjectionError


def _depth(z: float) -> float:
    z = float(z)
    if not z > 0:
        raise ProjectionError(f"cannot project a point at depth z={z} (must be > 0)")
    return z


def project(rig: CameraRig, p: Sequence[float]) -> Tuple[float, float]:
    """Left-view pixel coordinates of a 3D point (continuous, no rounding)."""
    x, y, z = (float(c) for c in p)
    z = _depth(z)
    return rig.fx * x / z + rig.cx, rig.fy * y / z + rig.cy


def project_right(rig: CameraRig, p: Sequence[float]) -> Tuple[float, float]:
    """Right-view pixel coordinates: the left ones shifted by fx*b/z."""
    u, v = project(rig, p)
    return u - rig.focal_baseline / float(p[2]), v


def backproject(rig: CameraRig, u: float, v: float, z: float) -> Tuple[float, float, float]:
    """Exact right-inverse of ``project``."""
    z = _depth(z)
    return (float(u) - rig.cx) * z / rig.fx, (float(v) - rig.cy) * z / rig.fy, z


def project_points(rig: CameraRig, xyz: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized ``project`` over an [N, 3] array, in float64."""
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    z = xyz[:, 2]
    if np.any(z <= 0):
        raise ProjectionError(f"{int(np.sum(z <= 0))} point(s) at or behind the camera plane")
    return rig.fx * xyz[:, 0] / z + rig.cx, rig.fy * xyz[:, 1] / z + rig.cy


def backproject_pixels(
    rig: CameraRig, u: np.ndarray, v: np.ndarray, z: np.ndarray
) -> np.ndarray:
    """Vectorized ``backproject``; returns [N, 3] float64."""
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    z = np.asarray(z, dtype=np.float64).ravel()
    if np.any(z <= 0):
        raise ProjectionError(f"{int(np.sum(z <= 0))} pixel(s) with depth <= 0")
    return np.stack([(u - rig.cx) * z / rig.fx, (v - rig.cy) * z / rig.fy, z], axis=1)
