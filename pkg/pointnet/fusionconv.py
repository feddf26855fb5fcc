"""
FusionConv: image-guided point convolution.

For every center ``c`` with neighbor set ``N(c)`` and output channel ``k``:

    G_k(dp)  = A_k0 + A_k1 dx + A_k2 dy + A_k3 dz        dp = p_c - p_i (meters)
    out_k(c) = 1/|N(c)| * sum_{i in N(c)} (mix @ F_fuse)_k(i) * G_k(p_c - p_i)

Neighbors are summed in ascending point index (CSR order).
"""

from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from core.ops.activation import ReLU
from core.ops.base import Operator
from core.parameters import Parameter, ParameterSet
from dto.camera import CameraRig, VoxelGridSpec
from dto.point_cloud import PointCloud
from errors import BackwardBeforeForwardError, ShapeMismatchError
from pointnet.baselines import PointLift
from pointnet.base import PointNetwork
from pointnet.cluster import ClusterIndex, Window, cluster
from pointnet.fusion import ImageToPointFusion


class FusionConv(Operator):
    """``forward(F_fuse [2C, N]) -> [C, N]`` for fixed clusters and positions."""

    kind = "fusionconv"

    def __init__(self, A: Parameter, mix: Parameter, clusters: ClusterIndex, xyz: np.ndarray):
        super().__init__()
        if A.shape[1] != 4 or mix.shape[0] != A.shape[0]:
            raise ShapeMismatchError(self.kind, A.shape, mix.shape, "A [C,4] vs mix [C,2C]")
        self.A = A
        self.mix = mix
        self.clusters = clusters
        self.xyz = np.asarray(xyz, dtype=np.float64)

    def parameters(self) -> List[Parameter]:
        return [self.A, self.mix]

    def _geometry(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        centers = self.clusters.centers
        members = self.clusters.neighbors
        delta = self.xyz[centers] - self.xyz[members]  # [E, 3]
        inv_size = 1.0 / self.clusters.sizes[centers]
        return centers, members, delta, inv_size

    def forward(self, fused: np.ndarray) -> np.ndarray:
        n = self.clusters.count
        if fused.ndim != 2 or fused.shape != (self.mix.shape[1], n):
            raise ShapeMismatchError(self.kind, fused.shape, (self.mix.shape[1], n), "fused features")
        self._check_finite(fused)
        A = self.A.value
        mixed = self.mix.value @ fused  # [C, N]
        if n == 0:
            self._save(fused, mixed, None)
            return mixed

        centers, members, delta, inv_size = self._geometry()
        G = A[:, :1] + A[:, 1:] @ delta.T  # [C, E]
        contrib = mixed[:, members] * G * inv_size
        out = np.add.reduceat(contrib, self.clusters.row_splits[:-1], axis=1)
        self._save(fused, mixed, (centers, members, delta, inv_size, G))
        return out.astype(fused.dtype, copy=False)

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray]:
        fused, mixed, geometry = self._restore()
        g = self._check_upstream(upstream, mixed.shape)
        C, n = mixed.shape
        d_A = np.zeros(self.A.shape, dtype=np.float64)
        d_mixed = np.zeros((C, n), dtype=np.float64)
        if geometry is not None:
            centers, members, delta, inv_size, G = geometry
            g_edge = g[:, centers] * inv_size  # [C, E]
            d_mixed_edge = g_edge * G
            for k in range(C):
                d_mixed[k] = np.bincount(members, weights=d_mixed_edge[k], minlength=n)
            d_G = g_edge * mixed[:, members]
            d_A[:, 0] = d_G.sum(axis=1)
            d_A[:, 1:] = d_G @ delta
        self.A.accumulate(d_A.astype(self.A.value.dtype, copy=False))
        self.mix.accumulate((d_mixed @ fused.T).astype(self.mix.value.dtype, copy=False))
        return ((self.mix.value.T @ d_mixed).astype(fused.dtype, copy=False),)


class FusionConvStack:
    """
    ``layers`` FusionConv layers over one shared left feature map.  Each
    layer re-fuses the map with the previous layer's point features; ReLU
    sits between layers.  Clusters are computed once by the caller.
    """

    def __init__(self, params: ParameterSet, channels: int, layers: int, rng, prefix: str = "fusionconv"):
        self.channels = channels
        self.layers = []
        for i in range(layers):
            A = params.add(f"{prefix}.{i}.A", (channels, 4), rng, init="zeros")
            # G starts as the plain cluster mean
            A.value[:, 0] = 1.0
            mix = params.add(f"{prefix}.{i}.mix", (channels, 2 * channels), rng)
            self.layers.append((A, mix))
        self._trace: Optional[list] = None

    def forward(
        self,
        image: np.ndarray,
        point_features: np.ndarray,
        points: PointCloud,
        clusters: ClusterIndex,
        rig: CameraRig,
        spec: VoxelGridSpec,
    ) -> np.ndarray:
        trace = []
        x = point_features
        for i, (A, mix) in enumerate(self.layers):
            fuse = ImageToPointFusion.for_points(points, rig, spec)
            conv = FusionConv(A, mix, clusters, points.xyz)
            x = conv.forward(fuse.forward(image, x))
            relu = None
            if i < len(self.layers) - 1:
                relu = ReLU()
                x = relu.forward(x)
            trace.append((fuse, conv, relu))
        self._trace = trace
        return x

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Returns (d image, d input point features)."""
        if self._trace is None:
            raise BackwardBeforeForwardError("fusionconv-stack")
        d_image = None
        g = upstream
        for fuse, conv, relu in reversed(self._trace):
            if relu is not None:
                (g,) = relu.backward(g)
            (g,) = conv.backward(g)
            d_img, g = fuse.backward(g)
            d_image = d_img if d_image is None else d_image + d_img
        self._trace = None
        return d_image, g


class FusionConvNetwork(PointNetwork):
    """Point lift followed by the FusionConv stack; clusters per cloud."""

    mode = "fusionconv"

    def __init__(
        self,
        params: ParameterSet,
        channels: int,
        layers: int,
        z_max: float,
        window: Window,
        rng,
    ):
        self.channels = channels
        self.window = tuple(window)
        self.lift = PointLift(params, channels, z_max, rng)
        self.stack = FusionConvStack(params, channels, layers, rng)

    @property
    def out_channels(self) -> int:
        return self.channels

    def forward(
        self, image: np.ndarray, points: PointCloud, rig: CameraRig, spec: VoxelGridSpec
    ) -> np.ndarray:
        clusters = cluster(points, rig, spec, self.window)
        lifted = self.lift.forward(points).astype(image.dtype, copy=False)
        return self.stack.forward(image, lifted, points, clusters, rig, spec)

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        d_image, d_lifted = self.stack.backward(upstream)
        self.lift.backward(d_lifted)
        return d_image
