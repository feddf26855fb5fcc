"""
Point embedding.

Every accepted point marks its voxel as occupied.  With point features,
each occupied voxel holds the mean feature of the points that landed in
it; the mean is order-independent, so embedding is deterministic.
"""

from __future__ import annotations

import logging
from typing import Optional, Tuple

import numpy as np

from core.ops.base import Operator
from dto.camera import CameraRig, VoxelGridSpec
from dto.point_cloud import PointCloud
from errors import ShapeMismatchError
from geometry.voxel import voxel_indices

logger = logging.getLogger(__name__)


class PointEmbedding(Operator):
    """
    ``forward(F_P [C, N]) -> [C, D, H, W]`` (mean feature per voxel).

    The occupancy grid and the rejection count are available right after
    construction; they do not depend on the features.
    """

    kind = "embed-points"

    def __init__(self, points: PointCloud, rig: CameraRig, spec: VoxelGridSpec):
        super().__init__()
        self.spec = spec
        self.count = points.count
        index, accepted = voxel_indices(spec, rig, points.xyz)
        self.accepted = accepted
        self.rejected = int((~accepted).sum())
        iu, iv, idd = index[accepted].T
        self.flat = (idd * spec.H + iv) * spec.W + iu
        cells = spec.D * spec.H * spec.W
        self.hits = np.bincount(self.flat, minlength=cells)
        if self.rejected:
            logger.debug("  -> %d of %d point(s) outside %s", self.rejected, self.count, spec)

    @property
    def grid(self) -> Tuple[int, int, int]:
        return self.spec.D, self.spec.H, self.spec.W

    def occupancy(self) -> np.ndarray:
        return (self.hits > 0).reshape(self.grid)

    def forward(self, features: np.ndarray) -> np.ndarray:
        if features.ndim != 2 or features.shape[1] != self.count:
            raise ShapeMismatchError(self.kind, features.shape, (features.shape[0], self.count),
                                     "point features vs cloud")
        self._check_finite(features)
        C = features.shape[0]
        cells = self.hits.size
        denom = np.maximum(self.hits, 1)
        out = np.zeros((C, cells), dtype=np.float64)
        kept = features[:, self.accepted]
        for c in range(C):
            out[c] = np.bincount(self.flat, weights=kept[c], minlength=cells) / denom
        self._save(C, features.dtype)
        return out.reshape((C,) + self.grid).astype(features.dtype, copy=False)

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray]:
        C, dtype = self._restore()
        g = self._check_upstream(upstream, (C,) + self.grid).reshape(C, -1)
        d = np.zeros((C, self.count), dtype=np.float64)
        d[:, self.accepted] = g[:, self.flat] / self.hits[self.flat]
        return (d.astype(dtype, copy=False),)


def embed_points(
    points: PointCloud,
    features: Optional[np.ndarray],
    rig: CameraRig,
    spec: VoxelGridSpec,
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    ``(occupancy [D,H,W] bool, point-feature channels [C,D,H,W] or None)``.
    """
    embedding = PointEmbedding(points, rig, spec)
    if embedding.rejected:
        logger.info("  -> %d point(s) outside the grid were skipped", embedding.rejected)
    channels = None if features is None else embedding.forward(features)
    return embedding.occupancy(), channels
