"""
Point-feature extraction for the fusion volume.

  - RawPoints           occupancy only
  - PointMLP            per-point fully-connected stack
  - FusionConvNetwork   frustum clustering, image-to-point fusion and
                        FusionConv layers
"""

from pointnet.base import PointNetwork
from pointnet.baselines import PointLift, PointMLP, RawPoints
from pointnet.cluster import ClusterIndex, cluster, cluster_voxels
from pointnet.fusion import ImageToPointFusion, image_to_point_fuse
from pointnet.fusionconv import FusionConv, FusionConvNetwork, FusionConvStack
from pointnet.factory import build_point_network

__all__ = [
    "ClusterIndex",
    "FusionConv",
    "FusionConvNetwork",
    "FusionConvStack",
    "ImageToPointFusion",
    "PointLift",
    "PointMLP",
    "PointNetwork",
    "RawPoints",
    "build_point_network",
    "cluster",
    "cluster_voxels",
    "image_to_point_fuse",
]
