"""
Linear-algebra and elementwise operators.
"""

from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from core.ops.base import Operator, register_operator, unbroadcast
from core.parameters import Parameter
from errors import ShapeMismatchError


@register_operator
class MatMul(Operator):
    """[m, k] @ [k, n] -> [m, n]."""

    kind = "matmul"

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeMismatchError(self.kind, a.shape, b.shape)
        self._check_finite(a, b)
        self._save(a, b)
        return a @ b

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        a, b = self._restore()
        g = self._check_upstream(upstream, (a.shape[0], b.shape[1]))
        return g @ b.T, a.T @ g


@register_operator
class Linear(Operator):
    """
    Channel map over points: ``W @ x + b[:, None]`` with x of shape [Cin, N].
    """

    kind = "linear"

    def __init__(self, weight: Parameter, bias: Optional[Parameter] = None):
        super().__init__()
        self.weight = weight
        self.bias = bias

    def parameters(self):
        return [self.weight] + ([self.bias] if self.bias is not None else [])

    def forward(self, x: np.ndarray) -> np.ndarray:
        w = self.weight.value
        if x.ndim != 2 or x.shape[0] != w.shape[1]:
            raise ShapeMismatchError(self.kind, x.shape, w.shape, "input channels")
        self._check_finite(x)
        self._save(x)
        out = w @ x
        if self.bias is not None:
            out = out + self.bias.value[:, None]
        return out

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray]:
        (x,) = self._restore()
        w = self.weight.value
        g = self._check_upstream(upstream, (w.shape[0], x.shape[1]))
        self.weight.accumulate(g @ x.T)
        if self.bias is not None:
            self.bias.accumulate(g.sum(axis=1))
        return (w.T @ g,)


@register_operator
class Add(Operator):
    """Elementwise a + b with numpy broadcasting."""

    kind = "add"

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        try:
            out_shape = np.broadcast_shapes(a.shape, b.shape)
        except ValueError:
            raise ShapeMismatchError(self.kind, a.shape, b.shape) from None
        self._check_finite(a, b)
        self._save(a.shape, b.shape, out_shape)
        return a + b

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        a_shape, b_shape, out_shape = self._restore()
        g = self._check_upstream(upstream, out_shape)
        return unbroadcast(g, a_shape), unbroadcast(g, b_shape)


@register_operator
class Mul(Operator):
    """Elementwise a * b with numpy broadcasting."""

    kind = "mul"

    def forward(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        try:
            out_shape = np.broadcast_shapes(a.shape, b.shape)
        except ValueError:
            raise ShapeMismatchError(self.kind, a.shape, b.shape) from None
        self._check_finite(a, b)
        self._save(a, b, out_shape)
        return a * b

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        a, b, out_shape = self._restore()
        g = self._check_upstream(upstream, out_shape)
        return unbroadcast(g * b, a.shape), unbroadcast(g * a, b.shape)


@register_operator
class MeanReduce(Operator):
    """Mean over one axis, or over everything when ``axis`` is None."""

    kind = "mean-reduce"

    def __init__(self, axis: Optional[int] = None):
        super().__init__()
        self.axis = axis

    def forward(self, x: np.ndarray) -> np.ndarray:
        if self.axis is not None and not -x.ndim <= self.axis < x.ndim:
            raise ShapeMismatchError(self.kind, x.shape, (self.axis,), "reduction axis")
        self._check_finite(x)
        self._save(x.shape)
        return np.asarray(x.mean(axis=self.axis))

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray]:
        (shape,) = self._restore()
        g = np.asarray(upstream)
        if self.axis is None:
            count = int(np.prod(shape))
            return (np.broadcast_to(g, shape) / count,)
        count = shape[self.axis]
        return (np.broadcast_to(np.expand_dims(g, self.axis), shape) / count,)
