"""
Frustum-window clustering.

Point ``i`` is a neighbor of center ``c`` iff their voxel indices differ by
at most ``(wu, wv, wd)`` along (iu, iv, id).  Neighbor lists are stored in
CSR form (``row_splits`` + flat ``neighbors``), each list ascending in
point index and always containing the center itself.

The search buckets points by voxel key: points are sorted by key once,
then every window offset is resolved for all centers at once with
``searchsorted``.
"""

from __future__ import annotations

import itertools
import logging
from typing import List, Set, Tuple

import numpy as np
from pydantic import BaseModel

from dto.camera import CameraRig, VoxelGridSpec
from dto.point_cloud import PointCloud
from geometry.voxel import voxel_indices

logger = logging.getLogger(__name__)

Window = Tuple[int, int, int]


class ClusterIndex(BaseModel):
    row_splits: np.ndarray  # [N + 1] int64
    neighbors: np.ndarray  # [E] int64
    window: Window = (1, 1, 1)

    model_config = {"arbitrary_types_allowed": True}

    @property
    def count(self) -> int:
        return int(self.row_splits.shape[0] - 1)

    @property
    def sizes(self) -> np.ndarray:
        return np.diff(self.row_splits)

    @property
    def centers(self) -> np.ndarray:
        """Center index of every entry of ``neighbors``."""
        return np.repeat(np.arange(self.count, dtype=np.int64), self.sizes)

    def neighbors_of(self, center: int) -> np.ndarray:
        return self.neighbors[self.row_splits[center] : self.row_splits[center + 1]]

    def as_sets(self) -> List[Set[int]]:
        return [set(self.neighbors_of(c).tolist()) for c in range(self.count)]


def _window_offsets(window: Window) -> np.ndarray:
    wu, wv, wd = window
    return np.array(
        list(
            itertools.product(range(-wu, wu + 1), range(-wv, wv + 1), range(-wd, wd + 1))
        ),
        dtype=np.int64,
    )


def cluster_voxels(index: np.ndarray, window: Window = (1, 1, 1)) -> ClusterIndex:
    """Cluster points given their [N, 3] integer voxel indices."""
    index = np.asarray(index, dtype=np.int64).reshape(-1, 3)
    n = index.shape[0]
    if n == 0:
        return ClusterIndex(
            row_splits=np.zeros(1, dtype=np.int64),
            neighbors=np.zeros(0, dtype=np.int64),
            window=window,
        )

    pad = np.asarray(window, dtype=np.int64)
    lo = index.min(axis=0) - pad
    extent = index.max(axis=0) + pad - lo + 1

    def key(cells: np.ndarray) -> np.ndarray:
        c = cells - lo
        return (c[:, 0] * extent[1] + c[:, 1]) * extent[2] + c[:, 2]

    keys = key(index)
    order = np.argsort(keys, kind="stable")
    sorted_keys = keys[order]

    centers, members = [], []
    for offset in _window_offsets(window):
        probe = key(index + offset)
        start = np.searchsorted(sorted_keys, probe, side="left")
        stop = np.searchsorted(sorted_keys, probe, side="right")
        counts = stop - start
        total = int(counts.sum())
        if total == 0:
            continue
        first = np.repeat(start, counts)
        within = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        centers.append(np.repeat(np.arange(n, dtype=np.int64), counts))
        members.append(order[first + within])

    center = np.concatenate(centers)
    member = np.concatenate(members)
    ordering = np.lexsort((member, center))
    row_splits = np.zeros(n + 1, dtype=np.int64)
    row_splits[1:] = np.cumsum(np.bincount(center, minlength=n))
    return ClusterIndex(row_splits=row_splits, neighbors=member[ordering], window=window)


def cluster(
    points: PointCloud,
    rig: CameraRig,
    spec: VoxelGridSpec,
    window: Window = (1, 1, 1),
) -> ClusterIndex:
    index, accepted = voxel_indices(spec, rig, points.xyz)
    outside = int((~accepted).sum())
    if outside:
        logger.debug("clustering %d point(s) that fall outside %s", outside, spec)
    result = cluster_voxels(index, window)
    logger.debug(
        "  -> %d point(s), %d neighbor pair(s), window %s", points.count, result.neighbors.size, window
    )
    return result
