"""
Learnable state.

Tensors are plain ``numpy.ndarray`` objects (row-major, float32 for
training, float64 inside gradcheck).  A ``Parameter`` wraps one array with
its gradient buffer and the optimizer's moment accumulators; a
``ParameterSet`` is the ordered, uniquely-named collection a model owns.
"""

from __future__ import annotations

import math
from typing import Dict, Iterator, List, Optional, Sequence

import numpy as np

from errors import DuplicateParameterError, ShapeMismatchError


class Parameter:
    """A named learnable array with += gradient accumulation."""

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.array(value, copy=True)
        if self.value.dtype not in (np.float32, np.float64):
            self.value = self.value.astype(np.float32)
        self.grad: Optional[np.ndarray] = None
        self.m = np.zeros_like(self.value)
        self.v = np.zeros_like(self.value)
        self.step = 0

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape}, dtype={self.value.dtype})"

    @property
    def shape(self) -> tuple:
        return self.value.shape

    @property
    def size(self) -> int:
        return int(self.value.size)

    def accumulate(self, grad: np.ndarray) -> None:
        if grad.shape != self.value.shape:
            raise ShapeMismatchError(
                f"accumulate[{self.name}]", self.value.shape, grad.shape
            )
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        self.grad += grad

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)

    def astype(self, dtype) -> None:
        """Cast value, gradient and accumulators in place."""
        self.value = self.value.astype(dtype)
        self.m = self.m.astype(dtype)
        self.v = self.v.astype(dtype)
        if self.grad is not None:
            self.grad = self.grad.astype(dtype)


class ParameterSet:
    """Ordered collection of uniquely-named parameters."""

    def __init__(self, params: Sequence[Parameter] = ()):
        self._params: Dict[str, Parameter] = {}
        for p in params:
            self.register(p)

    def register(self, param: Parameter) -> Parameter:
        if param.name in self._params:
            raise DuplicateParameterError(param.name)
        self._params[param.name] = param
        return param

    def add(
        self,
        name: str,
        shape: Sequence[int],
        rng: np.random.Generator,
        init: str = "he",
        fan_in: Optional[int] = None,
        dtype=np.float32,
    ) -> Parameter:
        """
        Create and register a parameter.

        ``init``: "he" (normal, std sqrt(2 / fan_in)), "zeros" or "ones".
        ``fan_in`` defaults to the product of all but the leading axis.
        """
        shape = tuple(int(s) for s in shape)
        if init == "zeros":
            value = np.zeros(shape, dtype=dtype)
        elif init == "ones":
            value = np.ones(shape, dtype=dtype)
        elif init == "he":
            if fan_in is None:
                fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else 1
            std = math.sqrt(2.0 / max(fan_in, 1))
            value = (rng.standard_normal(shape) * std).astype(dtype)
        else:
            raise ValueError(f"unknown initializer {init!r}")
        return self.register(Parameter(name, value))

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    @property
    def names(self) -> List[str]:
        return list(self._params)

    @property
    def total_size(self) -> int:
        return sum(p.size for p in self)

    def zero_grad(self) -> None:
        for p in self:
            p.zero_grad()

    def astype(self, dtype) -> "ParameterSet":
        for p in self:
            p.astype(dtype)
        return self

    def snapshot(self) -> Dict[str, np.ndarray]:
        return {p.name: p.value.copy() for p in self}
