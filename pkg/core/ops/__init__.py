"""
Differentiable operators.

Importing this package registers every operator kind:
  - matmul, linear, add, mul, mean-reduce
  - relu, softmax-over-axis
  - conv2d, conv3d
  - bilinear-sample-2d
  - smooth-l1
"""

from core.ops.base import (
    Operator,
    build_operator,
    op_forward_backward,
    operator_kinds,
    register_operator,
)
from core.ops.linear import Add, Linear, MatMul, MeanReduce, Mul
from core.ops.activation import ReLU, Softmax
from core.ops.conv import Conv2d, Conv3d
from core.ops.sampling import BilinearSample2d
from core.ops.loss import SmoothL1

__all__ = [
    "Operator",
    "build_operator",
    "op_forward_backward",
    "operator_kinds",
    "register_operator",
    "Add",
    "BilinearSample2d",
    "Conv2d",
    "Conv3d",
    "Linear",
    "MatMul",
    "MeanReduce",
    "Mul",
    "ReLU",
    "Softmax",
    "SmoothL1",
]
