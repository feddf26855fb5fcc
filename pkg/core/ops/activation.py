from __future__ import annotations

from typing import Tuple

import numpy as np
from scipy.special import softmax

from core.ops.base import Operator, register_operator
from errors import ShapeMismatchError


@register_operator
class ReLU(Operator):
    kind = "relu"

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._check_finite(x)
        active = x > 0
        self._save(active)
        return np.where(active, x, 0).astype(x.dtype, copy=False)

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray]:
        (active,) = self._restore()
        g = self._check_upstream(upstream, active.shape)
        return (np.where(active, g, 0).astype(g.dtype, copy=False),)


@register_operator
class Softmax(Operator):
    """Numerically stable softmax along one axis."""

    kind = "softmax-over-axis"

    def __init__(self, axis: int = 0):
        super().__init__()
        self.axis = axis

    def forward(self, x: np.ndarray) -> np.ndarray:
        if not -x.ndim <= self.axis < x.ndim:
            raise ShapeMismatchError(self.kind, x.shape, (self.axis,), "softmax axis")
        self._check_finite(x)
        y = softmax(x, axis=self.axis).astype(x.dtype, copy=False)
        self._save(y)
        return y

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray]:
        (y,) = self._restore()
        g = self._check_upstream(upstream, y.shape)
        dot = np.sum(g * y, axis=self.axis, keepdims=True)
        return (y * (g - dot),)
