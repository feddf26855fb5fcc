from __future__ import annotations

from typing import Optional

import numpy as np
from pydantic import BaseModel, field_validator, model_validator


class DepthMap(BaseModel):
    """
    Dense depth in meters with a validity mask.

    Invalid pixels carry depth 0 so the map survives a PFM round-trip with
    the mask recoverable as ``depth > 0``.
    """

    depth: np.ndarray  # [H, W] float32
    mask: Optional[np.ndarray] = None  # [H, W] bool

    model_config = {"arbitrary_types_allowed": True}

    @field_validator("depth", mode="before")
    @classmethod
    def _as_float32(cls, value) -> np.ndarray:
        arr = np.asarray(value, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"depth map must be 2-D, got shape {arr.shape}")
        return arr

    @model_validator(mode="after")
    def _fill_mask(self) -> "DepthMap":
        if self.mask is None:
            self.mask = self.depth > 0
        else:
            self.mask = np.asarray(self.mask, dtype=bool)
            if self.mask.shape != self.depth.shape:
                raise ValueError(
                    f"mask shape {self.mask.shape} != depth shape {self.depth.shape}"
                )
        return self

    @property
    def shape(self) -> tuple[int, int]:
        return self.depth.shape

    @property
    def valid_count(self) -> int:
        return int(self.mask.sum())

    def masked(self) -> np.ndarray:
        """Depth with invalid pixels zeroed (the on-disk representation)."""
        return np.where(self.mask, self.depth, 0.0).astype(np.float32)
