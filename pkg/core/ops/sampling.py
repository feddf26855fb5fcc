"""
Bilinear sampling of a [C, H, W] feature map at K continuous (x, y)
locations, x along W and y along H, integer coordinates at cell centers.

Padding modes:
  - ``zeros``   taps outside the map contribute 0 (volume filling,
                image-to-point fusion)
  - ``border``  coordinates are clamped into the map first (upsampling)
"""

from __future__ import annotations

from typing import List, Literal, Tuple

import numpy as np

from core.ops.base import Operator, register_operator
from errors import ShapeMismatchError

Padding = Literal["zeros", "border"]


def _taps(x: np.ndarray, y: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Corner indices and weights: [(xi, yi, weight), ...] in fixed order."""
    x0 = np.floor(x)
    y0 = np.floor(y)
    fx = x - x0
    fy = y - y0
    x0 = x0.astype(np.int64)
    y0 = y0.astype(np.int64)
    return [
        (x0, y0, (1 - fx) * (1 - fy)),
        (x0 + 1, y0, fx * (1 - fy)),
        (x0, y0 + 1, (1 - fx) * fy),
        (x0 + 1, y0 + 1, fx * fy),
    ]


@register_operator
class BilinearSample2d(Operator):
    """
    ``forward(fmap [C,H,W], x [K], y [K]) -> [C, K]``.

    ``backward`` returns gradients for the map and for both coordinate
    vectors; callers that treat coordinates as constants drop the latter.
    """

    kind = "bilinear-sample-2d"

    def __init__(self, padding: Padding = "zeros"):
        super().__init__()
        if padding not in ("zeros", "border"):
            raise ValueError(f"unknown padding mode {padding!r}")
        self.padding = padding

    def forward(self, fmap: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        if fmap.ndim != 3:
            raise ShapeMismatchError(self.kind, fmap.shape, (0, 0, 0), "feature map rank")
        x = np.asarray(x, dtype=np.float64).ravel()
        y = np.asarray(y, dtype=np.float64).ravel()
        if x.shape != y.shape:
            raise ShapeMismatchError(self.kind, x.shape, y.shape, "coordinate vectors")
        self._check_finite(fmap, x, y)

        _, H, W = fmap.shape
        inside = np.ones_like(x, dtype=bool)
        if self.padding == "border":
            xc = np.clip(x, 0, W - 1)
            yc = np.clip(y, 0, H - 1)
            # clamped coordinates have zero coordinate-gradient
            inside = (xc == x) & (yc == y)
            x, y = xc, yc

        taps = []
        out = np.zeros((fmap.shape[0], x.size), dtype=fmap.dtype)
        for xi, yi, wt in _taps(x, y):
            valid = (xi >= 0) & (xi < W) & (yi >= 0) & (yi < H)
            xs = np.where(valid, xi, 0)
            ys = np.where(valid, yi, 0)
            vals = fmap[:, ys, xs] * valid
            out += (vals * wt).astype(fmap.dtype, copy=False)
            taps.append((xs, ys, valid, vals))
        self._save(fmap.shape, fmap.dtype, x, y, inside, taps)
        return out

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        shape, dtype, x, y, inside, taps = self._restore()
        C, H, W = shape
        g = self._check_upstream(upstream, (C, x.size))

        fx = x - np.floor(x)
        fy = y - np.floor(y)
        weights = [(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy]

        dmap = np.zeros((C, H * W), dtype=np.float64)
        for (xs, ys, valid, _), wt in zip(taps, weights):
            flat = ys * W + xs
            contrib = g * (wt * valid)
            for c in range(C):
                dmap[c] += np.bincount(flat, weights=contrib[c], minlength=H * W)

        (_, _, _, v00), (_, _, _, v10), (_, _, _, v01), (_, _, _, v11) = taps
        dvdx = (1 - fy) * (v10 - v00) + fy * (v11 - v01)
        dvdy = (1 - fx) * (v01 - v00) + fx * (v11 - v10)
        dx = np.sum(g * dvdx, axis=0) * inside
        dy = np.sum(g * dvdy, axis=0) * inside
        return dmap.reshape(shape).astype(dtype, copy=False), dx, dy
