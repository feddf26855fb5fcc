"""LiDAR simulation: ground-truth pixels re-read as 3D points."""

from __future__ import annotations

import logging

import numpy as np

from dto.point_cloud import PointCloud
from dto.scene import SceneSample
from errors import SamplingError
from geometry.camera import backproject_pixels

logger = logging.getLogger(__name__)


def sample_lidar(sample: SceneSample, count: int, seed=0, dropout: float = 0.0) -> PointCloud:
    """
    ``count`` distinct valid pixels drawn uniformly, back-projected through
    the ground truth, then each kept with probability ``1 - dropout``.

    *seed* is anything ``numpy.random.default_rng`` accepts.
    """
    if not 0.0 <= dropout <= 1.0:
        raise SamplingError(f"dropout must lie in [0, 1], got {dropout}")
    if count < 0:
        raise SamplingError(f"point count must be >= 0, got {count}")
    valid = np.flatnonzero(sample.depth.mask)
    if count > valid.size:
        raise SamplingError(
            f"asked for {count} point(s) but the scene has only {valid.size} valid depth pixel(s)"
        )
    rng = np.random.default_rng(seed)
    chosen = rng.choice(valid, size=count, replace=False)
    chosen = chosen[rng.random(count) >= dropout]
    if chosen.size < count:
        logger.debug("  -> dropout %.2f removed %d of %d point(s)", dropout, count - chosen.size, count)
    if not chosen.size:
        return PointCloud.empty()

    W = sample.width
    v, u = np.divmod(chosen, W)
    z = sample.depth.depth.ravel()[chosen]
    return PointCloud(xyz=backproject_pixels(sample.rig, u, v, z))
