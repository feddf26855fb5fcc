"""
Volume builders, one per volume mode.

Each builder assembles the full payload (stereo channels, then occupancy or
point-feature channels) and replays the assembly backwards.  Points are
always embedded into ``embed_spec``; the aggregation and regression run on
``output_spec``.  The two differ only for the depth volume, which embeds in
disparity space and resamples afterwards.
"""

from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from typing import ClassVar, Optional, Tuple

import numpy as np

from dto.camera import CameraRig, VoxelGridSpec
from dto.config import ModelConfig
from dto.point_cloud import PointCloud
from dto.volume import FusionVolume
from errors import BackwardBeforeForwardError
from volume.baselines import DepthResample, resampling_matrix
from volume.embed import PointEmbedding
from volume.stereo import StereoPayload

logger = logging.getLogger(__name__)


class VolumeBuilder(ABC):
    """Builds a FusionVolume from stereo features and (optionally) points."""

    mode: ClassVar[str] = ""

    def __init__(self, rig: CameraRig, config: ModelConfig):
        self.rig = rig
        self.config = config
        self._state: Optional[tuple] = None

    @property
    @abstractmethod
    def embed_spec(self) -> VoxelGridSpec:
        """Grid the stereo payload is sampled on and points are embedded in."""
        ...

    @property
    def output_spec(self) -> VoxelGridSpec:
        """Grid of the finished volume (what aggregation and regression see)."""
        return self.embed_spec

    def _finish(self, payload: np.ndarray, occupancy: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return payload, occupancy

    def _finish_backward(self, upstream: np.ndarray) -> np.ndarray:
        return upstream

    def build(
        self,
        left: np.ndarray,
        right: np.ndarray,
        points: PointCloud,
        point_features: Optional[np.ndarray] = None,
        embed: bool = True,
    ) -> FusionVolume:
        spec = self.embed_spec
        stereo = StereoPayload.for_spec(self.rig, spec)
        parts = [stereo.forward(left, right)]
        grid = (spec.D, spec.H, spec.W)
        occupancy = np.zeros(grid, dtype=bool)
        embedding = None
        rejected = 0
        if embed:
            embedding = PointEmbedding(points, self.rig, spec)
            occupancy = embedding.occupancy()
            rejected = embedding.rejected
            if point_features is None:
                parts.append(occupancy[None].astype(left.dtype))
                embedding = None
            else:
                parts.append(embedding.forward(point_features))
        payload, occupancy = self._finish(np.concatenate(parts, axis=0), occupancy)
        self._state = (stereo, embedding, left.shape[0])
        logger.debug(
            "  -> %s volume: %d channel(s), %d occupied voxel(s)",
            self.mode, payload.shape[0], int(occupancy.sum()),
        )
        return FusionVolume(
            spec=self.output_spec,
            payload=payload,
            occupancy=occupancy,
            image_channels=left.shape[0],
            rejected_points=rejected,
        )

    def backward(
        self, upstream: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray]]:
        """``(d left, d right, d point features or None)``."""
        if self._state is None:
            raise BackwardBeforeForwardError(f"{self.mode}-volume")
        stereo, embedding, C = self._state
        g = self._finish_backward(upstream)
        d_left, d_right = stereo.backward(g[: 2 * C])
        d_points = None
        if embedding is not None:
            (d_points,) = embedding.backward(g[2 * C :])
        self._state = None
        return d_left, d_right, d_points


class FusionVolumeBuilder(VolumeBuilder):
    """Depth-uniform bins over [0, z_max]."""

    mode = "fusion"

    @property
    def embed_spec(self) -> VoxelGridSpec:
        c = self.config
        return VoxelGridSpec.for_rig(self.rig, c.D, c.z_max, "depth-linear", downsample=c.downsample)


class CostVolumeBuilder(VolumeBuilder):
    """Disparity-uniform bins over [0, d_max]."""

    mode = "cost"

    @property
    def embed_spec(self) -> VoxelGridSpec:
        c = self.config
        return VoxelGridSpec.for_rig(
            self.rig, c.D, c.z_max, "disparity-linear", d_max=c.effective_d_max,
            downsample=c.downsample,
        )


class DepthVolumeBuilder(CostVolumeBuilder):
    """A cost volume resampled onto depth-uniform bins."""

    mode = "depth"

    def __init__(self, rig: CameraRig, config: ModelConfig):
        super().__init__(rig, config)
        self._resample_matrix = resampling_matrix(self.embed_spec, self.output_spec, rig)

    @property
    def output_spec(self) -> VoxelGridSpec:
        c = self.config
        return VoxelGridSpec.for_rig(self.rig, c.D, c.z_max, "depth-linear", downsample=c.downsample)

    def _finish(self, payload, occupancy):
        self._resampler = DepthResample(self._resample_matrix)
        out = self._resampler.forward(payload)
        moved = np.einsum("ts,shw->thw", self._resample_matrix, occupancy.astype(np.float64))
        return out, moved > 0

    def _finish_backward(self, upstream):
        (g,) = self._resampler.backward(upstream)
        return g


def build_volume_builder(config: ModelConfig, rig: CameraRig) -> VolumeBuilder:
    """
    Instantiate the builder for ``config.volume``:
      - "fusion"  → FusionVolumeBuilder
      - "cost"    → CostVolumeBuilder
      - "depth"   → DepthVolumeBuilder
    """
    if config.volume == "fusion":
        return FusionVolumeBuilder(rig, config)
    if config.volume == "cost":
        return CostVolumeBuilder(rig, config)
    if config.volume == "depth":
        return DepthVolumeBuilder(rig, config)
    raise ValueError(f"Unknown volume mode: {config.volume!r}")
