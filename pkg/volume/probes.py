"""Gradient-check probes for volume assembly."""

from __future__ import annotations

from typing import Dict

import numpy as np

from core.gradcheck import GradProbe, register_probe
from dto.camera import VoxelGridSpec
from dto.point_cloud import PointCloud
from pointnet.probes import probe_geometry
from volume.baselines import DepthResample, resampling_matrix
from volume.embed import PointEmbedding
from volume.stereo import StereoPayload


@register_probe
class StereoPayloadProbe(GradProbe):
    kind = "stereo-payload"

    def __init__(self, rng):
        super().__init__(rng)
        self.disparities = np.concatenate([[np.inf], rng.uniform(0.5, 14.0, size=4)])
        self.inputs = {
            "left": rng.standard_normal((2, 3, 5)),
            "right": rng.standard_normal((2, 3, 5)),
        }

    def forward(self) -> np.ndarray:
        self._op = StereoPayload(self.disparities, downsample=4)
        return self._op.forward(self.inputs["left"], self.inputs["right"])

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        d_left, d_right = self._op.backward(upstream)
        return {"left": d_left, "right": d_right}


@register_probe
class EmbedPointsProbe(GradProbe):
    kind = "embed-points"

    def __init__(self, rng):
        super().__init__(rng)
        self.rig, self.spec, points = probe_geometry(rng, 9)
        # near-duplicate on the same ray, usually sharing its voxel
        self.points = PointCloud(xyz=np.concatenate([points.xyz, points.xyz[:1] * 1.001]))
        self.inputs = {"features": rng.standard_normal((2, self.points.count))}

    def forward(self) -> np.ndarray:
        self._op = PointEmbedding(self.points, self.rig, self.spec)
        return self._op.forward(self.inputs["features"])

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        (d,) = self._op.backward(upstream)
        return {"features": d}


@register_probe
class DepthResampleProbe(GradProbe):
    kind = "depth-resample"

    def __init__(self, rng):
        super().__init__(rng)
        rig, _, _ = probe_geometry(rng, 1)
        source = VoxelGridSpec.for_rig(rig, D=6, z_max=20.0, mode="disparity-linear", d_max=5.0)
        target = VoxelGridSpec.for_rig(rig, D=7, z_max=20.0)
        self.matrix = resampling_matrix(source, target, rig)
        self.inputs = {"volume": rng.standard_normal((2, 6, 2, 3))}

    def forward(self) -> np.ndarray:
        self._op = DepthResample(self.matrix)
        return self._op.forward(self.inputs["volume"])

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        (d,) = self._op.backward(upstream)
        return {"volume": d}
