"""
Gradient-check probes for the primitive operators.

Random instances stay away from the measure-zero kinks: relu inputs are
bounded away from 0, bilinear coordinates away from integers, smooth-l1
residuals away from |r| = 1.
"""

from __future__ import annotations

from typing import Dict

import numpy as np

from core.gradcheck import GradProbe, register_probe
from core.ops import (
    Add,
    BilinearSample2d,
    Conv2d,
    Conv3d,
    Linear,
    MatMul,
    MeanReduce,
    Mul,
    ReLU,
    SmoothL1,
    Softmax,
)


def away_from_zero(rng: np.random.Generator, shape, lo: float = 0.1, hi: float = 1.0) -> np.ndarray:
    """Uniform magnitudes in [lo, hi] with random signs."""
    return rng.uniform(lo, hi, size=shape) * rng.choice([-1.0, 1.0], size=shape)


def off_grid(rng: np.random.Generator, count: int, extent: int) -> np.ndarray:
    """Strictly interior, non-integer coordinates in (0, extent - 1)."""
    base = rng.integers(0, extent - 1, size=count)
    return base + rng.uniform(0.15, 0.85, size=count)


class _SingleOpProbe(GradProbe):
    """Probe wrapping exactly one operator built by ``make_op``."""

    def make_op(self):
        raise NotImplementedError

    def forward(self) -> np.ndarray:
        self._op = self.make_op()
        return self._op.forward(*self.inputs.values())

    def backward(self, upstream: np.ndarray) -> Dict[str, np.ndarray]:
        grads = self._op.backward(upstream)
        return dict(zip(self.inputs, grads))


@register_probe
class MatMulProbe(_SingleOpProbe):
    kind = "matmul"

    def __init__(self, rng):
        super().__init__(rng)
        m, k, n = rng.integers(1, 6, size=3)
        self.inputs = {"a": rng.standard_normal((m, k)), "b": rng.standard_normal((k, n))}

    def make_op(self):
        return MatMul()


@register_probe
class LinearProbe(_SingleOpProbe):
    kind = "linear"

    def __init__(self, rng):
        super().__init__(rng)
        cin, cout, n = rng.integers(1, 6, size=3)
        self.inputs = {"x": rng.standard_normal((cin, n))}
        self.weight = self.params.add("weight", (cout, cin), rng, dtype=np.float64)
        self.bias = self.params.add("bias", (cout,), rng, fan_in=cin, dtype=np.float64)

    def make_op(self):
        return Linear(self.weight, self.bias)


@register_probe
class AddProbe(_SingleOpProbe):
    kind = "add"

    def __init__(self, rng):
        super().__init__(rng)
        self.inputs = {"a": rng.standard_normal((3, 4)), "b": rng.standard_normal((1, 4))}

    def make_op(self):
        return Add()


@register_probe
class MulProbe(_SingleOpProbe):
    kind = "mul"

    def __init__(self, rng):
        super().__init__(rng)
        self.inputs = {"a": rng.standard_normal((2, 3, 4)), "b": rng.standard_normal((3, 1))}

    def make_op(self):
        return Mul()


@register_probe
class MeanReduceProbe(_SingleOpProbe):
    kind = "mean-reduce"

    def __init__(self, rng):
        super().__init__(rng)
        self.axis = [None, 0, 1][int(rng.integers(0, 3))]
        self.inputs = {"x": rng.standard_normal((4, 5))}

    def make_op(self):
        return MeanReduce(axis=self.axis)


@register_probe
class ReLUProbe(_SingleOpProbe):
    kind = "relu"

    def __init__(self, rng):
        super().__init__(rng)
        self.inputs = {"x": away_from_zero(rng, (3, 7))}

    def make_op(self):
        return ReLU()


@register_probe
class SoftmaxProbe(_SingleOpProbe):
    kind = "softmax-over-axis"

    def __init__(self, rng):
        super().__init__(rng)
        self.axis = int(rng.integers(0, 2))
        self.inputs = {"x": rng.standard_normal((4, 6)) * 2.0}

    def make_op(self):
        return Softmax(axis=self.axis)


@register_probe
class Conv2dProbe(_SingleOpProbe):
    kind = "conv2d"

    def __init__(self, rng):
        super().__init__(rng)
        self.stride = int(rng.integers(1, 3))
        self.inputs = {"x": rng.standard_normal((2, 6, 5))}
        self.weight = self.params.add("weight", (3, 2, 3, 3), rng, dtype=np.float64)
        self.bias = self.params.add("bias", (3,), rng, fan_in=18, dtype=np.float64)

    def make_op(self):
        return Conv2d(self.weight, self.bias, stride=self.stride)


@register_probe
class Conv3dProbe(_SingleOpProbe):
    kind = "conv3d"

    def __init__(self, rng):
        super().__init__(rng)
        self.inputs = {"x": rng.standard_normal((2, 4, 3, 4))}
        self.weight = self.params.add("weight", (2, 2, 3, 3, 3), rng, dtype=np.float64)
        self.bias = self.params.add("bias", (2,), rng, fan_in=54, dtype=np.float64)

    def make_op(self):
        return Conv3d(self.weight, self.bias)


@register_probe
class BilinearSampleProbe(_SingleOpProbe):
    kind = "bilinear-sample-2d"

    def __init__(self, rng):
        super().__init__(rng)
        self.padding = "zeros" if rng.random() < 0.5 else "border"
        C, H, W, K = 2, 5, 6, 7
        self.inputs = {
            "fmap": rng.standard_normal((C, H, W)),
            "x": off_grid(rng, K, W),
            "y": off_grid(rng, K, H),
        }

    def make_op(self):
        return BilinearSample2d(padding=self.padding)


@register_probe
class SmoothL1Probe(GradProbe):
    kind = "smooth-l1"

    def __init__(self, rng):
        super().__init__(rng)
        shape = (4, 5)
        target = rng.uniform(1.0, 10.0, size=shape)
        small = rng.uniform(0.05, 0.8, size=shape)
        large = rng.uniform(1.2, 3.0, size=shape)
        residual = np.where(rng.random(shape) < 0.5, small, large)
        residual *= rng.choice([-1.0, 1.0], size=shape)
        self.mask = rng.random(shape) < 0.7
        self.mask.flat[0] = True
        self.inputs = {"pred": target + residual, "target": target}

    def forward(self) -> np.ndarray:
        self._op = SmoothL1()
        return self._op.forward(self.inputs["pred"], self.inputs["target"], self.mask)

    def backward(self, upstream: np.ndarray) -> Dict[str, np.ndarray]:
        d_pred, d_target = self._op.backward(upstream)
        return {"pred": d_pred, "target": d_target}
