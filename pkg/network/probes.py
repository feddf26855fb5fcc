"""Gradient-check probes for the network heads and the micro pipeline."""

from __future__ import annotations

from typing import Dict

import numpy as np

from core.gradcheck import GradProbe, register_probe
from core.parameters import ParameterSet
from dto.camera import CameraRig
from dto.config import ModelConfig
from dto.point_cloud import PointCloud
from geometry.camera import backproject_pixels
from network.aggregation import Aggregator
from network.features import FeatureExtractor
from network.model import VolumetricPropagationNetwork
from network.regression import DisparityToDepth, SoftArgmax, Upsample


@register_probe
class SoftArgmaxProbe(GradProbe):
    kind = "soft-argmax"

    def __init__(self, rng):
        super().__init__(rng)
        self.values = np.arange(48, dtype=np.float64) / 47 * 100.0
        self.inputs = {"logits": rng.standard_normal((48, 2, 3))}

    def forward(self) -> np.ndarray:
        self._op = SoftArgmax(self.values)
        return self._op.forward(self.inputs["logits"])

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        (d,) = self._op.backward(upstream)
        return {"logits": d}


@register_probe
class DisparityToDepthProbe(GradProbe):
    kind = "disparity-to-depth"

    def __init__(self, rng):
        super().__init__(rng)
        # floor is fb / z_max = 0.5; stay clear of it
        self.inputs = {"disparity": rng.uniform(0.7, 20.0, size=(3, 4))}

    def forward(self) -> np.ndarray:
        self._op = DisparityToDepth(focal_baseline=50.0, z_max=100.0)
        return self._op.forward(self.inputs["disparity"])

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        (d,) = self._op.backward(upstream)
        return {"disparity": d}


@register_probe
class UpsampleProbe(GradProbe):
    kind = "upsample"

    def __init__(self, rng):
        super().__init__(rng)
        self.inputs = {"grid": rng.standard_normal((3, 4))}

    def forward(self) -> np.ndarray:
        self._op = Upsample(4)
        return self._op.forward(self.inputs["grid"])

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        (d,) = self._op.backward(upstream)
        return {"grid": d}


@register_probe
class FeatureExtractorProbe(GradProbe):
    kind = "feature-extractor"

    def __init__(self, rng):
        super().__init__(rng)
        self.extractor = FeatureExtractor(self.params, 3, 2, rng)
        self.params.astype(np.float64)
        self.inputs = {"image": rng.uniform(0.0, 1.0, size=(3, 8, 8))}

    def forward(self) -> np.ndarray:
        out, self._tower = self.extractor.extract(self.inputs["image"])
        return out

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        return {"image": self._tower.backward(upstream)}


@register_probe
class AggregationStageProbe(GradProbe):
    kind = "aggregation-stage"

    def __init__(self, rng):
        super().__init__(rng)
        self.aggregator = Aggregator(self.params, 3, 2, 1, rng)
        self.params.astype(np.float64)
        self.inputs = {"volume": rng.standard_normal((3, 4, 4, 4))}

    def forward(self) -> np.ndarray:
        return self.aggregator.forward(self.inputs["volume"])[0]

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        return {"volume": self.aggregator.backward([upstream])}


@register_probe
class PipelineProbe(GradProbe):
    """Whole model on a micro configuration: 8x8 images, 5 points, two stages."""

    kind = "pipeline"
    tolerance = 2e-3
    probes = 1

    def __init__(self, rng):
        super().__init__(rng)
        self.rig = CameraRig(fx=8.0, fy=8.0, cx=3.5, cy=3.5, baseline=0.5, image_width=8, image_height=8)
        config = ModelConfig(C=2, D=6, z_max=20.0, stages=2, agg_channels=2)
        self.model = VolumetricPropagationNetwork(config)
        self.params: ParameterSet = self.model.params.astype(np.float64)
        u = rng.uniform(0.0, 5.5, 5)
        v = rng.uniform(0.0, 5.5, 5)
        z = rng.uniform(3.0, 18.0, 5)
        self.points = PointCloud(xyz=backproject_pixels(self.rig, u, v, z))
        self.inputs = {
            "left": rng.uniform(0.0, 1.0, size=(3, 8, 8)),
            "right": rng.uniform(0.0, 1.0, size=(3, 8, 8)),
        }

    def forward(self) -> np.ndarray:
        out = self.model.forward(self.inputs["left"], self.inputs["right"], self.points, self.rig)
        return np.stack(out.stage_depths)

    def backward(self, upstream) -> Dict[str, np.ndarray]:
        d_left, d_right = self.model.backward(list(upstream))
        return {"left": d_left, "right": d_right}
