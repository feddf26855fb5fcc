"""
Voxel binning.

A point lands in the voxel whose center is nearest:

    iu = round(u / downsample)         iv = round(v / downsample)
    id = round(z (D-1) / z_max)        depth-linear
    id = round((fx b / z) / step)      disparity-linear

with half-up rounding.  A point is rejected, never clamped, when any index
leaves [0, W) x [0, H) x [0, D) or its depth reaches z_max (1 + 1/(2(D-1))).
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from dto.camera import CameraRig, VoxelGridSpec
from geometry.camera import project_points


def round_half_up(x: np.ndarray) -> np.ndarray:
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


def depth_limit(spec: VoxelGridSpec) -> float:
    """Depth at which the last depth-linear bin's upper half ends."""
    return spec.z_max * (1.0 + 1.0 / (2.0 * (spec.D - 1)))


def depth_bin(spec: VoxelGridSpec, rig: CameraRig, z: np.ndarray) -> np.ndarray:
    """Nearest bin index for each depth (z > 0), not range-checked."""
    z = np.asarray(z, dtype=np.float64)
    if spec.mode == "depth-linear":
        return round_half_up(z * (spec.D - 1) / spec.z_max)
    return round_half_up(rig.focal_baseline / z / spec.bin_step)


def voxel_indices(
    spec: VoxelGridSpec, rig: CameraRig, xyz: np.ndarray
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Vectorized binning of an [N, 3] cloud.

    Returns ``(index, accepted)``: ``index`` is [N, 3] int64 ``(iu, iv, id)``
    (meaningless where rejected) and ``accepted`` the [N] boolean mask.

    Points need z > 0, except the camera origin itself in depth-linear
    mode: it lies on the principal ray and lands in bin 0 at
    ``(cx, cy)``. Any other z = 0 point has no projection and is rejected.
    """
    xyz = np.asarray(xyz, dtype=np.float64).reshape(-1, 3)
    n = xyz.shape[0]
    index = np.zeros((n, 3), dtype=np.int64)
    accepted = np.zeros(n, dtype=bool)
    positive = xyz[:, 2] > 0
    front = positive.copy()
    if spec.mode == "depth-linear":
        front |= np.all(xyz == 0.0, axis=1)
    if not np.any(front):
        return index, accepted

    u = np.full(n, rig.cx)
    v = np.full(n, rig.cy)
    if np.any(positive):
        u[positive], v[positive] = project_points(rig, xyz[positive])
    u, v = u[front], v[front]
    z = xyz[front, 2]
    iu = round_half_up(u / spec.downsample)
    iv = round_half_up(v / spec.downsample)
    idd = depth_bin(spec, rig, z)
    ok = (
        (iu >= 0) & (iu < spec.W)
        & (iv >= 0) & (iv < spec.H)
        & (idd >= 0) & (idd < spec.D)
        & (z < depth_limit(spec))
    )
    index[front] = np.stack([iu, iv, idd], axis=1)
    accepted[front] = ok
    return index, accepted


def voxel_index_of(
    spec: VoxelGridSpec, rig: CameraRig, p
) -> Optional[Tuple[int, int, int]]:
    """``(iu, iv, id)`` of one point, or None when it falls outside the grid."""
    index, accepted = voxel_indices(spec, rig, np.asarray(p, dtype=np.float64).reshape(1, 3))
    if not accepted[0]:
        return None
    iu, iv, idd = (int(c) for c in index[0])
    return iu, iv, idd


def decode_voxel(
    spec: VoxelGridSpec, rig: CameraRig, index: np.ndarray
) -> np.ndarray:
    """
    Voxel centers back in metric space: bin-center depth on the ray through
    the voxel's full-resolution pixel.  [N, 3] in, [N, 3] float64 out;
    disparity-0 bins decode to infinite depth.
    """
    index = np.asarray(index, dtype=np.int64).reshape(-1, 3)
    z = spec.bin_depths(rig)[index[:, 2]]
    u = index[:, 0] * float(spec.downsample)
    v = index[:, 1] * float(spec.downsample)
    with np.errstate(invalid="ignore"):
        x = (u - rig.cx) * z / rig.fx
        y = (v - rig.cy) * z / rig.fy
    return np.stack([x, y, z], axis=1)
