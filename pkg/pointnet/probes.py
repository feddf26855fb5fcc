"""
Gradient-check probes for the point networks.

Point positions are constants; only features and weights are checked.
"""

from __future__ import annotations

from typing import Dict, Tuple

import numpy as np

from core.gradcheck import GradProbe, register_probe
from dto.camera import CameraRig, VoxelGridSpec
from dto.point_cloud import PointCloud
from geometry.camera import backproject_pixels
from pointnet.baselines import PointMLP
from pointnet.cluster import cluster
from pointnet.fusion import ImageToPointFusion
from pointnet.fusionconv import FusionConv, FusionConvStack

_CHANNELS = 2


def probe_geometry(
    rng: np.random.Generator, count: int
) -> Tuple[CameraRig, VoxelGridSpec, PointCloud]:
    """A 16x16 rig with a 4x4x8 grid and *count* points inside it."""
    rig = CameraRig(fx=10.0, fy=10.0, cx=7.5, cy=7.5, baseline=0.5, image_width=16, image_height=16)
    spec = VoxelGridSpec.for_rig(rig, D=8, z_max=20.0)
    u = rng.uniform(0.0, 12.0, count)
    v = rng.uniform(0.0, 12.0, count)
    z = rng.uniform(2.0, 18.0, count)
    return rig, spec, PointCloud(xyz=backproject_pixels(rig, u, v, z))


@register_probe
class ImageToPointFuseProbe(GradProbe):
    kind = "image-to-point-fuse"

    def __init__(self, rng):
        super().__init__(rng)
        self.rig, self.spec, self.points = probe_geometry(rng, 6)
        self.inputs = {
            "image": rng.standard_normal((_CHANNELS, self.spec.H, self.spec.W)),
            "point_features": rng.standard_normal((_CHANNELS, self.points.count)),
        }

    def forward(self) -> np.ndarray:
        self._op = ImageToPointFusion.for_points(self.points, self.rig, self.spec)
        return self._op.forward(self.inputs["image"], self.inputs["point_features"])

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        d_image, d_points = self._op.backward(upstream)
        return {"image": d_image, "point_features": d_points}


@register_probe
class FusionConvProbe(GradProbe):
    kind = "fusionconv"

    def __init__(self, rng):
        super().__init__(rng)
        rig, spec, self.points = probe_geometry(rng, 10)
        self.clusters = cluster(self.points, rig, spec, (1, 1, 1))
        self.A = self.params.add("A", (_CHANNELS, 4), rng, fan_in=1, dtype=np.float64)
        self.mix = self.params.add("mix", (_CHANNELS, 2 * _CHANNELS), rng, dtype=np.float64)
        self.inputs = {"fused": rng.standard_normal((2 * _CHANNELS, self.points.count))}

    def forward(self) -> np.ndarray:
        self._op = FusionConv(self.A, self.mix, self.clusters, self.points.xyz)
        return self._op.forward(self.inputs["fused"])

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        (d_fused,) = self._op.backward(upstream)
        return {"fused": d_fused}


@register_probe
class FusionConvStackProbe(GradProbe):
    kind = "fusionconv-stack"

    def __init__(self, rng):
        super().__init__(rng)
        self.rig, self.spec, self.points = probe_geometry(rng, 8)
        self.clusters = cluster(self.points, self.rig, self.spec, (1, 1, 1))
        self.stack = FusionConvStack(self.params, _CHANNELS, 3, rng)
        self.params.astype(np.float64)
        for A, _ in self.stack.layers:
            A.value += 0.3 * rng.standard_normal(A.shape)
        self.inputs = {
            "image": rng.standard_normal((_CHANNELS, self.spec.H, self.spec.W)),
            "point_features": rng.standard_normal((_CHANNELS, self.points.count)),
        }

    def forward(self) -> np.ndarray:
        return self.stack.forward(
            self.inputs["image"], self.inputs["point_features"],
            self.points, self.clusters, self.rig, self.spec,
        )

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        d_image, d_points = self.stack.backward(upstream)
        return {"image": d_image, "point_features": d_points}


@register_probe
class PointMLPProbe(GradProbe):
    kind = "point-mlp"

    def __init__(self, rng):
        super().__init__(rng)
        self.mlp = PointMLP(self.params, _CHANNELS, 3, z_max=20.0, rng=rng)
        self.params.astype(np.float64)
        for name in self.params.names:
            if name.endswith("bias"):
                self.params[name].value += 0.1 * rng.standard_normal(self.params[name].shape)
        self.inputs = {"features": rng.standard_normal((_CHANNELS, 7))}

    def forward(self) -> np.ndarray:
        return self.mlp.transform(self.inputs["features"])

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        return {"features": self.mlp.backward_transform(upstream)}
