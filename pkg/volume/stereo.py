"""
Stereo payload of a volume.

Voxel ``(id, iv, iu)`` holds the left feature at ``(iu, iv)`` and the right
feature bilinearly sampled at ``(iu - disparity(id) / downsample, iv)``.
Right samples outside the map are zero.  Bins whose disparity is not
finite (depth 0) carry zero right features.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from core.ops.base import Operator
from core.ops.sampling import BilinearSample2d
from dto.camera import CameraRig, VoxelGridSpec
from errors import ShapeMismatchError


class StereoPayload(Operator):
    """``forward(F_L [C,H,W], F_R [C,H,W]) -> [2C, D, H, W]``."""

    kind = "stereo-payload"

    def __init__(self, disparities: np.ndarray, downsample: int):
        super().__init__()
        self.disparities = np.asarray(disparities, dtype=np.float64)
        self.downsample = int(downsample)

    @classmethod
    def for_spec(cls, rig: CameraRig, spec: VoxelGridSpec) -> "StereoPayload":
        return cls(spec.bin_disparities(rig), spec.downsample)

    def _coordinates(self, H: int, W: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        finite = np.flatnonzero(np.isfinite(self.disparities))
        shift = self.disparities[finite] / self.downsample
        iu = np.arange(W, dtype=np.float64)
        iv = np.arange(H, dtype=np.float64)
        x = iu[None, None, :] - shift[:, None, None]
        x = np.broadcast_to(x, (finite.size, H, W))
        y = np.broadcast_to(iv[None, :, None], (finite.size, H, W))
        return finite, x.ravel(), y.ravel()

    def forward(self, left: np.ndarray, right: np.ndarray) -> np.ndarray:
        if left.shape != right.shape or left.ndim != 3:
            raise ShapeMismatchError(self.kind, left.shape, right.shape, "left vs right features")
        self._check_finite(left, right)
        C, H, W = left.shape
        D = self.disparities.size

        out = np.zeros((2 * C, D, H, W), dtype=left.dtype)
        out[:C] = left[:, None]
        finite, x, y = self._coordinates(H, W)
        self._sampler = None
        if finite.size:
            self._sampler = BilinearSample2d(padding="zeros")
            sampled = self._sampler.forward(right, x, y)
            out[C:, finite] = sampled.reshape(C, finite.size, H, W)
        self._save(left.shape, finite)
        return out

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        shape, finite = self._restore()
        C, H, W = shape
        g = self._check_upstream(upstream, (2 * C, self.disparities.size, H, W))
        d_left = g[:C].sum(axis=1)
        if self._sampler is None:
            d_right = np.zeros(shape, dtype=g.dtype)
        else:
            d_right, _, _ = self._sampler.backward(g[C:, finite].reshape(C, -1))
        return d_left, d_right.astype(g.dtype, copy=False)


def build_stereo_payload(
    left: np.ndarray, right: np.ndarray, rig: CameraRig, spec: VoxelGridSpec
) -> np.ndarray:
    return StereoPayload.for_spec(rig, spec).forward(left, right)
