"""
Point networks without image guidance.

    PointLift   xyz / z_max -> C channels (the input features F_P_in)
    RawPoints   no features at all: the volume gets occupancy only
    PointMLP    lift, then a per-point Linear/ReLU stack (no neighbors)
"""

from __future__ import annotations

from typing import List, Optional

import numpy as np

from core.ops.activation import ReLU
from core.ops.base import Operator
from core.ops.linear import Linear
from core.parameters import Parameter, ParameterSet
from dto.camera import CameraRig, VoxelGridSpec
from dto.point_cloud import PointCloud
from errors import BackwardBeforeForwardError
from pointnet.base import PointNetwork


class PointLift:
    """Learned per-point linear map of normalized coordinates."""

    def __init__(self, params: ParameterSet, channels: int, z_max: float, rng, prefix: str = "lift"):
        self.z_max = float(z_max)
        self.weight = params.add(f"{prefix}.weight", (channels, 3), rng)
        self.bias = params.add(f"{prefix}.bias", (channels,), rng, init="zeros")
        self._op: Optional[Linear] = None

    def forward(self, points: PointCloud) -> np.ndarray:
        coords = (points.xyz.T / self.z_max).astype(self.weight.value.dtype)
        self._op = Linear(self.weight, self.bias)
        return self._op.forward(coords)

    def backward(self, upstream: np.ndarray) -> None:
        if self._op is None:
            raise BackwardBeforeForwardError("point-lift")
        self._op.backward(upstream)
        self._op = None


class RawPoints(PointNetwork):
    mode = "raw"

    @property
    def out_channels(self) -> int:
        return 0

    def forward(self, image, points, rig, spec) -> None:
        return None

    def backward(self, upstream) -> None:
        return None


class PointMLP(PointNetwork):
    """``layers`` Linear(C -> C) maps with ReLU between them."""

    mode = "mlp"

    def __init__(self, params: ParameterSet, channels: int, layers: int, z_max: float, rng):
        self.channels = channels
        self.lift = PointLift(params, channels, z_max, rng)
        self.linears: List[tuple[Parameter, Parameter]] = [
            (
                params.add(f"mlp.{i}.weight", (channels, channels), rng),
                params.add(f"mlp.{i}.bias", (channels,), rng, init="zeros"),
            )
            for i in range(layers)
        ]
        self._ops: Optional[List[Operator]] = None

    @property
    def out_channels(self) -> int:
        return self.channels

    def transform(self, features: np.ndarray) -> np.ndarray:
        """The per-point stack alone, on given input features."""
        ops: List[Operator] = []
        x = features
        for i, (weight, bias) in enumerate(self.linears):
            if i > 0:
                ops.append(ReLU())
                x = ops[-1].forward(x)
            ops.append(Linear(weight, bias))
            x = ops[-1].forward(x)
        self._ops = ops
        return x

    def forward(
        self, image: np.ndarray, points: PointCloud, rig: CameraRig, spec: VoxelGridSpec
    ) -> np.ndarray:
        return self.transform(self.lift.forward(points))

    def backward_transform(self, upstream: np.ndarray) -> np.ndarray:
        if self._ops is None:
            raise BackwardBeforeForwardError("point-mlp")
        g = upstream
        for op in reversed(self._ops):
            (g,) = op.backward(g)
        self._ops = None
        return g

    def backward(self, upstream: np.ndarray) -> None:
        self.lift.backward(self.backward_transform(upstream))
        return None
