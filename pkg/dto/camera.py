"""
Camera and voxel-grid DTOs.

    CameraRig       intrinsics + stereo baseline (every 2D <-> 3D constant)
    VoxelGridSpec   W x H x D bin layout of a volume over the left frustum
"""

from __future__ import annotations

from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, model_validator

GridMode = Literal["depth-linear", "disparity-linear"]


class CameraRig(BaseModel):
    """Rectified pinhole stereo pair; the left camera is the reference frame."""

    fx: float
    fy: float
    cx: float
    cy: float
    baseline: float  # meters
    image_width: int
    image_height: int

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check_ranges(self) -> "CameraRig":
        for key in ("fx", "fy", "baseline"):
            if not getattr(self, key) > 0:
                raise ValueError(f"{key} must be positive, got {getattr(self, key)}")
        if not 0 <= self.cx < self.image_width:
            raise ValueError(f"cx={self.cx} outside [0, {self.image_width})")
        if not 0 <= self.cy < self.image_height:
            raise ValueError(f"cy={self.cy} outside [0, {self.image_height})")
        return self

    @property
    def focal_baseline(self) -> float:
        """fx * baseline: disparity (px) times depth (m)."""
        return self.fx * self.baseline

    def disparity(self, z):
        """Disparity in full-resolution pixels for depth *z* (inf at z == 0)."""
        z = np.asarray(z, dtype=np.float64)
        with np.errstate(divide="ignore"):
            return np.where(z > 0, self.focal_baseline / np.where(z > 0, z, 1.0), np.inf)


class VoxelGridSpec(BaseModel):
    """
    Bin layout of a volume.

    ``(iu, iv)`` index quarter-resolution feature cells whose centers sit at
    integer feature-map coordinates (full-resolution pixel ``iu * downsample``).
    The depth axis is either uniform in metric depth over [0, z_max] or
    uniform in disparity over [0, d_max].
    """

    W: int
    H: int
    D: int
    z_max: float = 100.0
    mode: GridMode = "depth-linear"
    d_max: Optional[float] = None
    downsample: int = 4

    model_config = {"frozen": True}

    @model_validator(mode="after")
    def _check(self) -> "VoxelGridSpec":
        if self.W < 1 or self.H < 1:
            raise ValueError(f"grid extents must be positive, got W={self.W} H={self.H}")
        if self.D < 2:
            raise ValueError(f"need at least two depth bins, got D={self.D}")
        if not self.z_max > 0:
            raise ValueError(f"z_max must be positive, got {self.z_max}")
        if self.downsample < 1:
            raise ValueError(f"downsample must be >= 1, got {self.downsample}")
        if self.mode == "disparity-linear" and not (self.d_max and self.d_max > 0):
            raise ValueError("disparity-linear grids need a positive d_max")
        return self

    @classmethod
    def for_rig(
        cls,
        rig: CameraRig,
        D: int,
        z_max: float = 100.0,
        mode: GridMode = "depth-linear",
        d_max: Optional[float] = None,
        downsample: int = 4,
    ) -> "VoxelGridSpec":
        """Grid covering the rig's full image at 1/downsample resolution."""
        return cls(
            W=rig.image_width // downsample,
            H=rig.image_height // downsample,
            D=D,
            z_max=z_max,
            mode=mode,
            d_max=d_max,
            downsample=downsample,
        )

    def fits(self, rig: CameraRig) -> bool:
        return (
            self.W * self.downsample <= rig.image_width
            and self.H * self.downsample <= rig.image_height
        )

    # ------------------------------------------------------------------
    # Bin geometry
    # ------------------------------------------------------------------

    @property
    def bin_step(self) -> float:
        """Spacing between adjacent bin centers (meters or pixels by mode)."""
        if self.mode == "depth-linear":
            return self.z_max / (self.D - 1)
        return float(self.d_max) / (self.D - 1)

    @property
    def half_bin(self) -> float:
        """Worst-case metric depth error of a depth-linear grid."""
        return self.z_max / (2 * (self.D - 1))

    def depth_centers(self) -> np.ndarray:
        """Depth-linear bin centers (d / (D-1)) * z_max."""
        return np.arange(self.D, dtype=np.float64) / (self.D - 1) * self.z_max

    def disparity_centers(self) -> np.ndarray:
        """Disparity-linear bin centers, uniform over [0, d_max]."""
        return np.arange(self.D, dtype=np.float64) * self.bin_step

    def bin_disparities(self, rig: CameraRig) -> np.ndarray:
        """Full-resolution disparity of every bin center (inf for depth 0)."""
        if self.mode == "disparity-linear":
            return self.disparity_centers()
        return rig.disparity(self.depth_centers())

    def bin_depths(self, rig: CameraRig) -> np.ndarray:
        """Metric depth of every bin center (inf for disparity 0)."""
        if self.mode == "depth-linear":
            return self.depth_centers()
        # z = fx*b/d is the same reciprocal map as d = fx*b/z
        return rig.disparity(self.disparity_centers())

    def __str__(self) -> str:
        extra = f", d_max={self.d_max:g}" if self.mode == "disparity-linear" else ""
        return (
            f"{self.mode}[{self.W}x{self.H}x{self.D}, z_max={self.z_max:g}{extra}, "
            f"ds={self.downsample}]"
        )
