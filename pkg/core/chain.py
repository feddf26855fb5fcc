"""
Sequential composition of single-input operators.

A ``Chain`` is built from operator *factories* so each forward pass gets
fresh single-use operators; ``backward`` replays the last pass in reverse.
"""

from __future__ import annotations

from typing import Callable, List, Sequence

import numpy as np

from core.ops.base import Operator
from errors import BackwardBeforeForwardError

OperatorFactory = Callable[[], Operator]


class Chain:
    def __init__(self, factories: Sequence[OperatorFactory], name: str = "chain"):
        self.factories = list(factories)
        self.name = name
        self._ops: List[Operator] = []

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._ops = []
        for make in self.factories:
            op = make()
            x = op.forward(x)
            self._ops.append(op)
        return x

    __call__ = forward

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        if not self._ops:
            raise BackwardBeforeForwardError(self.name)
        g = upstream
        for op in reversed(self._ops):
            (g,) = op.backward(g)[:1]
        self._ops = []
        return g
