"""
FusionVolume: the W x H x D grid with its channel payload.

Channel layout is positional and fixed:

    [0, C)        left image features
    [C, 2C)       right image features (disparity-shifted)
    [2C, Ch)      occupancy (1 channel) or point features (C channels),
                  absent under early fusion
"""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, model_validator

from dto.camera import VoxelGridSpec


class FusionVolume(BaseModel):
    spec: VoxelGridSpec
    payload: np.ndarray  # [Ch, D, H, W]
    occupancy: np.ndarray  # [D, H, W] bool
    image_channels: int  # C
    rejected_points: int = 0

    model_config = {"arbitrary_types_allowed": True}

    @model_validator(mode="after")
    def _check(self) -> "FusionVolume":
        grid = (self.spec.D, self.spec.H, self.spec.W)
        if self.payload.ndim != 4 or self.payload.shape[1:] != grid:
            raise ValueError(f"payload shape {self.payload.shape} does not match grid {grid}")
        if self.occupancy.shape != grid:
            raise ValueError(f"occupancy shape {self.occupancy.shape} does not match grid {grid}")
        if self.payload.shape[0] < 2 * self.image_channels:
            raise ValueError("payload has fewer channels than the stereo features")
        return self

    @property
    def channels(self) -> int:
        return int(self.payload.shape[0])

    @property
    def occupied_count(self) -> int:
        return int(self.occupancy.sum())

    def left(self) -> np.ndarray:
        return self.payload[: self.image_channels]

    def right(self) -> np.ndarray:
        return self.payload[self.image_channels : 2 * self.image_channels]

    def point_channels(self) -> np.ndarray:
        return self.payload[2 * self.image_channels :]
