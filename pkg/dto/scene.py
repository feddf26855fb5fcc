"""
SceneSample: one training / evaluation item.

    left, right   [3, 4H, 4W] float32 images in [0, 1]
    depth         ground truth at full resolution (DepthMap)
    points        simulated LiDAR (PointCloud)
    rig           calibration
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, model_validator

from dto.camera import CameraRig
from dto.depth import DepthMap
from dto.point_cloud import PointCloud


class SceneSample(BaseModel):
    left: np.ndarray
    right: np.ndarray
    depth: DepthMap
    points: PointCloud
    rig: CameraRig
    seed: int = 0
    name: str = ""

    model_config = {"arbitrary_types_allowed": True}

    @model_validator(mode="after")
    def _check_extents(self) -> "SceneSample":
        expected = (3, self.rig.image_height, self.rig.image_width)
        for view in ("left", "right"):
            shape = getattr(self, view).shape
            if shape != expected:
                raise ValueError(f"{view} image shape {shape}, calibration expects {expected}")
        if self.depth.shape != expected[1:]:
            raise ValueError(
                f"depth shape {self.depth.shape}, calibration expects {expected[1:]}"
            )
        return self

    @property
    def height(self) -> int:
        return self.rig.image_height

    @property
    def width(self) -> int:
        return self.rig.image_width

    def with_points(self, points: PointCloud) -> "SceneSample":
        return self.model_copy(update={"points": points})
