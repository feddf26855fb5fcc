"""
Image-to-point fusion: interpolate the left feature map at every point's
projection and stack it on top of the point's own features.

    F_fuse = [ bilinear(F_L, u / ds, v / ds) ; F_P_in ]     [2C, N]
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from core.ops.base import Operator
from core.ops.sampling import BilinearSample2d
from dto.camera import CameraRig, VoxelGridSpec
from dto.point_cloud import PointCloud
from errors import ShapeMismatchError
from geometry.camera import project_points


def feature_coordinates(
    points: PointCloud, rig: CameraRig, spec: VoxelGridSpec
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Continuous feature-map coordinates (x along W, y along H).

    Coordinates are clamped to ``[0, W-1] x [0, H-1]``: a point whose
    voxel was accepted by rounding but whose projection lies just past
    the outermost node samples that edge node at full weight instead of
    being faded by zero padding.
    """
    if points.count == 0:
        empty = np.zeros(0, dtype=np.float64)
        return empty, empty
    u, v = project_points(rig, points.xyz)
    x = np.clip(u / spec.downsample, 0.0, spec.W - 1)
    y = np.clip(v / spec.downsample, 0.0, spec.H - 1)
    return x, y


class ImageToPointFusion(Operator):
    """``forward(F_L [C,H,W], F_P_in [C',N]) -> [C + C', N]``."""

    kind = "image-to-point-fuse"

    def __init__(self, x: np.ndarray, y: np.ndarray):
        super().__init__()
        self.x = x
        self.y = y

    @classmethod
    def for_points(
        cls, points: PointCloud, rig: CameraRig, spec: VoxelGridSpec
    ) -> "ImageToPointFusion":
        return cls(*feature_coordinates(points, rig, spec))

    def forward(self, image: np.ndarray, point_features: np.ndarray) -> np.ndarray:
        if point_features.ndim != 2 or point_features.shape[1] != self.x.size:
            raise ShapeMismatchError(
                self.kind, point_features.shape, (point_features.shape[0], self.x.size),
                "point features vs projected points",
            )
        self._sampler = BilinearSample2d(padding="zeros")
        sampled = self._sampler.forward(image, self.x, self.y)
        self._save(image.shape[0])
        return np.concatenate([sampled, point_features.astype(sampled.dtype, copy=False)], axis=0)

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        (c_image,) = self._restore()
        d_image, _, _ = self._sampler.backward(upstream[:c_image])
        return d_image, upstream[c_image:]


def image_to_point_fuse(
    image: np.ndarray,
    points: PointCloud,
    point_features: Optional[np.ndarray],
    rig: CameraRig,
    spec: VoxelGridSpec,
) -> np.ndarray:
    """One-shot forward of ``ImageToPointFusion`` (no backward kept)."""
    if point_features is None:
        point_features = np.zeros((0, points.count), dtype=image.dtype)
    return ImageToPointFusion.for_points(points, rig, spec).forward(image, point_features)
