"""
Ablation volumes.

CostV    stereo payload over disparity-uniform bins (concatenation volume)
DepthV   a cost volume linearly resampled along disparity onto
         depth-uniform bins, after points were embedded in disparity space
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from core.ops.base import Operator
from dto.camera import CameraRig, VoxelGridSpec
from errors import ShapeMismatchError
from volume.stereo import StereoPayload


def build_cost_volume_baseline(
    left: np.ndarray, right: np.ndarray, rig: CameraRig, spec: VoxelGridSpec
) -> np.ndarray:
    if spec.mode != "disparity-linear":
        raise ValueError(f"cost volumes need a disparity-linear grid, got {spec}")
    return StereoPayload.for_spec(rig, spec).forward(left, right)


def resampling_matrix(
    source: VoxelGridSpec, target: VoxelGridSpec, rig: CameraRig
) -> np.ndarray:
    """
    ``R[t, s]``: linear interpolation weights along disparity from the
    source (disparity-linear) bins onto the target (depth-linear) bins.
    Target disparities beyond the source range take the end bin.
    """
    wanted = target.bin_disparities(rig)
    position = np.where(np.isfinite(wanted), wanted / source.bin_step, source.D - 1)
    position = np.clip(position, 0.0, source.D - 1)
    lo = np.floor(position).astype(np.int64)
    frac = position - lo
    hi = np.minimum(lo + 1, source.D - 1)

    R = np.zeros((target.D, source.D), dtype=np.float64)
    rows = np.arange(target.D)
    np.add.at(R, (rows, lo), 1.0 - frac)
    np.add.at(R, (rows, hi), frac)
    return R


class DepthResample(Operator):
    """``forward(V [Ch, D_src, H, W]) -> [Ch, D_tgt, H, W]``."""

    kind = "depth-resample"

    def __init__(self, matrix: np.ndarray):
        super().__init__()
        self.matrix = matrix

    def forward(self, volume: np.ndarray) -> np.ndarray:
        if volume.ndim != 4 or volume.shape[1] != self.matrix.shape[1]:
            raise ShapeMismatchError(self.kind, volume.shape, self.matrix.shape, "disparity axis")
        self._check_finite(volume)
        self._save(volume.dtype)
        out = np.einsum("ts,cshw->cthw", self.matrix, volume)
        return out.astype(volume.dtype, copy=False)

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray]:
        (dtype,) = self._restore()
        g = np.einsum("ts,cthw->cshw", self.matrix, upstream)
        return (g.astype(dtype, copy=False),)


def build_depth_volume_baseline(
    cost_volume: np.ndarray, source: VoxelGridSpec, target: VoxelGridSpec, rig: CameraRig
) -> np.ndarray:
    return DepthResample(resampling_matrix(source, target, rig)).forward(cost_volume)
