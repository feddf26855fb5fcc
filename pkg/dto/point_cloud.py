from __future__ import annotations

from typing import Optional

import numpy as np
from pydantic import BaseModel, field_validator, model_validator


class PointCloud(BaseModel):
    """
    N points in the reference (left) camera frame: x right, y down,
    z forward, meters.  Every stored point has z > 0.
    """

    xyz: np.ndarray  # [N, 3] float32
    features: Optional[np.ndarray] = None  # [C, N]

    model_config = {"arbitrary_types_allowed": True}

    @field_validator("xyz", mode="before")
    @classmethod
    def _as_float32(cls, value) -> np.ndarray:
        arr = np.asarray(value, dtype=np.float32)
        if arr.size == 0:
            return arr.reshape(0, 3)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"point coordinates must be [N, 3], got {arr.shape}")
        return np.ascontiguousarray(arr)

    @model_validator(mode="after")
    def _check(self) -> "PointCloud":
        if self.count and not np.all(self.xyz[:, 2] > 0):
            raise ValueError("point cloud contains points with z <= 0")
        if not np.all(np.isfinite(self.xyz)):
            raise ValueError("point cloud contains non-finite coordinates")
        if self.features is not None and self.features.shape[-1] != self.count:
            raise ValueError(
                f"features cover {self.features.shape[-1]} points, cloud has {self.count}"
            )
        return self

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(xyz=np.zeros((0, 3), dtype=np.float32))

    @property
    def count(self) -> int:
        return int(self.xyz.shape[0])

    def subset(self, keep: np.ndarray) -> "PointCloud":
        """Points selected by a boolean mask or index array, order preserved."""
        feats = None if self.features is None else self.features[:, keep]
        return PointCloud(xyz=self.xyz[keep], features=feats)

    def __len__(self) -> int:
        return self.count
