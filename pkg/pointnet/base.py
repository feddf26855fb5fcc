"""
Base class for the point networks that feed the fusion volume.

Each point network answers two questions:
  1. **forward**: given the left feature map and the cloud, which
     per-point features (``[C, N]``) should be embedded into the volume?
     ``None`` means "occupancy only".
  2. **backward**: given the gradient of those features, accumulate the
     network's parameter gradients and return the gradient of the left
     feature map (``None`` when the network never looks at the image).

The model picks one network per run through ``build_point_network``.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import ClassVar, Optional

import numpy as np

from dto.camera import CameraRig, VoxelGridSpec
from dto.point_cloud import PointCloud


class PointNetwork(ABC):
    """Interface that every point network must implement."""

    mode: ClassVar[str] = ""

    @property
    @abstractmethod
    def out_channels(self) -> int:
        """Feature channels written into the volume (0 = occupancy only)."""
        ...

    @abstractmethod
    def forward(
        self,
        image: np.ndarray,
        points: PointCloud,
        rig: CameraRig,
        spec: VoxelGridSpec,
    ) -> Optional[np.ndarray]:
        """
        Compute point features ``[C, N]`` for *points*.

        *image* is the left feature map ``[C, H, W]`` at grid resolution.
        """
        ...

    @abstractmethod
    def backward(self, upstream: Optional[np.ndarray]) -> Optional[np.ndarray]:
        """
        Propagate the point-feature gradient.

        Returns the gradient of the left feature map, or ``None``.
        """
        ...
