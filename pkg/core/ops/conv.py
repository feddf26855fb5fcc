"""
Dense 2-D / 3-D convolution (cross-correlation) on channel-first tensors
without a batch axis: ``[Cin, *spatial] -> [Cout, *spatial']``.

The forward pass is an im2col over ``sliding_window_view`` contracted with
``tensordot``; the backward pass scatters the column gradient back with
one strided slice-add per kernel tap, in a fixed tap order.
"""

from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from core.ops.base import Operator, register_operator
from core.parameters import Parameter
from errors import ShapeMismatchError


class _ConvNd(Operator):
    ndim: int = 0

    def __init__(
        self,
        weight: Parameter,
        bias: Optional[Parameter] = None,
        stride: int = 1,
        padding: Optional[int] = None,
    ):
        super().__init__()
        if weight.value.ndim != self.ndim + 2:
            raise ShapeMismatchError(
                self.kind, weight.shape, (0,) * (self.ndim + 2), "weight rank"
            )
        self.weight = weight
        self.bias = bias
        self.stride = int(stride)
        # "same" padding for odd kernels unless told otherwise
        self.padding = weight.shape[2] // 2 if padding is None else int(padding)

    def parameters(self) -> List[Parameter]:
        return [self.weight] + ([self.bias] if self.bias is not None else [])

    @property
    def _spatial_axes(self) -> Tuple[int, ...]:
        return tuple(range(1, self.ndim + 1))

    def _windows(self, xp: np.ndarray) -> np.ndarray:
        kernel = self.weight.shape[2:]
        win = sliding_window_view(xp, kernel, axis=self._spatial_axes)
        if self.stride > 1:
            step = slice(None, None, self.stride)
            win = win[(slice(None),) + (step,) * self.ndim]
        return win

    def forward(self, x: np.ndarray) -> np.ndarray:
        w = self.weight.value
        if x.ndim != self.ndim + 1 or x.shape[0] != w.shape[1]:
            raise ShapeMismatchError(self.kind, x.shape, w.shape, "input vs weight")
        p = self.padding
        padded = tuple(s + 2 * p for s in x.shape[1:])
        if any(ps < k for ps, k in zip(padded, w.shape[2:])):
            raise ShapeMismatchError(self.kind, x.shape, w.shape, "kernel larger than input")
        self._check_finite(x)

        xp = np.pad(x, [(0, 0)] + [(p, p)] * self.ndim) if p else x
        win = self._windows(xp)
        n = self.ndim
        out = np.tensordot(
            w, win, axes=(list(range(1, n + 2)), [0] + list(range(n + 1, 2 * n + 1)))
        )
        if self.bias is not None:
            out = out + self.bias.value.reshape((-1,) + (1,) * n)
        self._save(x.shape, xp)
        return out.astype(x.dtype, copy=False)

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray]:
        x_shape, xp = self._restore()
        w = self.weight.value
        n = self.ndim
        win = self._windows(xp)
        out_shape = (w.shape[0],) + win.shape[1 : n + 1]
        g = self._check_upstream(upstream, out_shape)

        spatial = list(range(1, n + 1))
        self.weight.accumulate(np.tensordot(g, win, axes=(spatial, spatial)))
        if self.bias is not None:
            self.bias.accumulate(g.sum(axis=tuple(spatial)))

        # [Cin, *k, *out]
        dcols = np.tensordot(w, g, axes=([0], [0]))
        dxp = np.zeros_like(xp)
        s = self.stride
        out_spatial = out_shape[1:]
        for tap in np.ndindex(*w.shape[2:]):
            region = tuple(
                slice(t, t + s * (o - 1) + 1, s) for t, o in zip(tap, out_spatial)
            )
            dxp[(slice(None),) + region] += dcols[(slice(None),) + tap]

        p = self.padding
        if p:
            dxp = dxp[(slice(None),) + tuple(slice(p, p + e) for e in x_shape[1:])]
        return (dxp,)


@register_operator
class Conv2d(_ConvNd):
    kind = "conv2d"
    ndim = 2


@register_operator
class Conv3d(_ConvNd):
    kind = "conv3d"
    ndim = 3
