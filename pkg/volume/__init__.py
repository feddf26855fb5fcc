"""
The unified 3D volume.

  - stereo         left / right feature channels over the bins
  - embed          occupancy and point-feature channels
  - baselines      cost volume and depth-resampled volume
  - builder        per-mode assembly of the full payload
  - quantization   embedding-error analysis per range band
"""

from volume.stereo import StereoPayload, build_stereo_payload
from volume.embed import PointEmbedding, embed_points
from volume.baselines import (
    DepthResample,
    build_cost_volume_baseline,
    build_depth_volume_baseline,
    resampling_matrix,
)
from volume.builder import (
    CostVolumeBuilder,
    DepthVolumeBuilder,
    FusionVolumeBuilder,
    VolumeBuilder,
    build_volume_builder,
)
from volume.quantization import quantization_report, quantization_specs

__all__ = [
    "CostVolumeBuilder",
    "DepthResample",
    "DepthVolumeBuilder",
    "FusionVolumeBuilder",
    "PointEmbedding",
    "StereoPayload",
    "VolumeBuilder",
    "build_cost_volume_baseline",
    "build_depth_volume_baseline",
    "build_stereo_payload",
    "build_volume_builder",
    "embed_points",
    "quantization_report",
    "quantization_specs",
    "resampling_matrix",
]
