"""
Depth regression.

    soft-argmax    z(u, v) = sum_d softmax(a(u, v))_d * value_d

``value_d`` are the bin centers of the output grid: metric depths for the
fusion / depth volumes, disparities for the cost volume (converted with
z = fx b / max(d, fx b / z_max)).  The grid-resolution map is then
upsampled x4 with bilinear border sampling.
"""

from __future__ import annotations

from typing import Tuple

import numpy as np

from core.ops.activation import Softmax
from core.ops.base import Operator, register_operator
from core.ops.sampling import BilinearSample2d
from dto.camera import CameraRig, VoxelGridSpec
from dto.depth import DepthMap
from errors import BackwardBeforeForwardError, ShapeMismatchError


@register_operator
class SoftArgmax(Operator):
    """``forward(logits [D, H, W]) -> [H, W]``: expectation of ``values``."""

    kind = "soft-argmax"

    def __init__(self, values: np.ndarray):
        super().__init__()
        self.values = np.asarray(values, dtype=np.float64)

    def forward(self, logits: np.ndarray) -> np.ndarray:
        if logits.shape[0] != self.values.size:
            raise ShapeMismatchError(self.kind, logits.shape, self.values.shape, "bins")
        self._softmax = Softmax(axis=0)
        prob = self._softmax.forward(logits)
        self._save(logits.dtype, logits.shape)
        expected = np.tensordot(self.values, prob, axes=(0, 0))
        return expected.astype(logits.dtype, copy=False)

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray]:
        dtype, shape = self._restore()
        g = self._check_upstream(upstream, shape[1:])
        d_prob = self.values.reshape((-1,) + (1,) * g.ndim) * g[None]
        (d_logits,) = self._softmax.backward(d_prob)
        return (d_logits.astype(dtype, copy=False),)


@register_operator
class DisparityToDepth(Operator):
    """``z = fb / max(d, fb / z_max)``; zero gradient where clamped."""

    kind = "disparity-to-depth"

    def __init__(self, focal_baseline: float, z_max: float):
        super().__init__()
        self.fb = float(focal_baseline)
        self.floor = self.fb / float(z_max)

    def forward(self, disparity: np.ndarray) -> np.ndarray:
        self._check_finite(disparity)
        free = disparity > self.floor
        d = np.where(free, disparity, self.floor)
        self._save(free, d, disparity.dtype)
        return (self.fb / d).astype(disparity.dtype, copy=False)

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray]:
        free, d, dtype = self._restore()
        g = self._check_upstream(upstream, d.shape)
        return (np.where(free, -self.fb / (d * d) * g, 0.0).astype(dtype, copy=False),)


@register_operator
class Upsample(Operator):
    """Bilinear x``factor`` upsampling of an [H, W] map with border padding."""

    kind = "upsample"

    def __init__(self, factor: int = 4):
        super().__init__()
        self.factor = int(factor)

    def forward(self, grid: np.ndarray) -> np.ndarray:
        if grid.ndim != 2:
            raise ShapeMismatchError(self.kind, grid.shape, (0, 0), "expects a 2-D map")
        H, W = grid.shape
        full = (H * self.factor, W * self.factor)
        ys, xs = np.meshgrid(
            np.arange(full[0], dtype=np.float64) / self.factor,
            np.arange(full[1], dtype=np.float64) / self.factor,
            indexing="ij",
        )
        self._sampler = BilinearSample2d(padding="border")
        out = self._sampler.forward(grid[None], xs.ravel(), ys.ravel())
        self._save(grid.shape, full)
        return out.reshape(full)

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray]:
        shape, full = self._restore()
        g = self._check_upstream(upstream, full)
        d_grid, _, _ = self._sampler.backward(g.reshape(1, -1))
        return (d_grid[0],)


class DepthRegressor:
    """soft-argmax (+ disparity conversion) + upsampling for one output grid."""

    def __init__(self, spec: VoxelGridSpec, rig: CameraRig):
        self.spec = spec
        self.rig = rig
        if spec.mode == "depth-linear":
            self.values = spec.depth_centers()
        else:
            self.values = spec.disparity_centers()
        self._ops = None

    def forward(self, logits: np.ndarray) -> np.ndarray:
        ops = [SoftArgmax(self.values)]
        if self.spec.mode == "disparity-linear":
            ops.append(DisparityToDepth(self.rig.focal_baseline, self.spec.z_max))
        ops.append(Upsample(self.spec.downsample))
        x = logits
        for op in ops:
            x = op.forward(x)
        self._ops = ops
        return x

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        if self._ops is None:
            raise BackwardBeforeForwardError("depth-regressor")
        g = upstream
        for op in reversed(self._ops):
            (g,) = op.backward(g)
        self._ops = None
        return g


def regress_depth(logits: np.ndarray, z_max: float, D: int, downsample: int = 4) -> DepthMap:
    """Depth-linear soft-argmax, upsampled x``downsample`` to full resolution."""
    if D < 2 or logits.shape[0] != D:
        raise ShapeMismatchError("soft-argmax", logits.shape, (D,), "need D >= 2 bins")
    centers = np.arange(D, dtype=np.float64) / (D - 1) * z_max
    grid = SoftArgmax(centers).forward(logits)
    depth = Upsample(downsample).forward(grid)
    return DepthMap(depth=depth, mask=np.ones(depth.shape, dtype=bool))


def regress_depth_map(logits: np.ndarray, spec: VoxelGridSpec, rig: CameraRig) -> DepthMap:
    """Full-resolution depth map for one aggregation output of ``spec``'s grid."""
    depth = DepthRegressor(spec, rig).forward(logits)
    return DepthMap(depth=depth, mask=np.ones(depth.shape, dtype=bool))
