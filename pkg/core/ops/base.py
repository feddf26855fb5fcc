"""
Base class for all differentiable operators.

Each operator answers two questions:
  1. **forward**: compute the output from its inputs, saving whatever the
     backward pass needs.
  2. **backward**: given the upstream gradient of the output, return one
     gradient per input (same order, same shapes) and add (+=) parameter
     gradients into their ``Parameter.grad`` buffers.

Operators are single-use: build one per application, call ``forward``
once, then ``backward`` at most once.  Composite layers keep the operator
instances of their forward pass and replay them in reverse.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Callable, ClassVar, Dict, List, Optional, Tuple, Type

import numpy as np

from core.parameters import Parameter
from errors import (
    BackwardBeforeForwardError,
    NonFiniteInputError,
    ShapeMismatchError,
    UnregisteredOperatorError,
)


class Operator(ABC):
    """Interface every differentiable operator implements."""

    kind: ClassVar[str] = ""

    def __init__(self) -> None:
        self._saved: Optional[tuple] = None

    def __call__(self, *inputs: np.ndarray) -> np.ndarray:
        return self.forward(*inputs)

    @abstractmethod
    def forward(self, *inputs: np.ndarray) -> np.ndarray:
        """Compute the output and save activations for ``backward``."""
        ...

    @abstractmethod
    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray, ...]:
        """Return input gradients; accumulate parameter gradients."""
        ...

    def parameters(self) -> List[Parameter]:
        return []

    # ------------------------------------------------------------------
    # Helpers for subclasses
    # ------------------------------------------------------------------

    def _save(self, *items) -> None:
        self._saved = items

    def _restore(self) -> tuple:
        if self._saved is None:
            raise BackwardBeforeForwardError(self.kind)
        return self._saved

    def _check_finite(self, *arrays: np.ndarray) -> None:
        for arr in arrays:
            if not np.all(np.isfinite(arr)):
                raise NonFiniteInputError(self.kind)

    def _check_upstream(self, upstream: np.ndarray, shape: tuple) -> np.ndarray:
        upstream = np.asarray(upstream)
        if upstream.shape != tuple(shape):
            raise ShapeMismatchError(self.kind, shape, upstream.shape, "upstream gradient")
        return upstream


# -------------------------------------------------------------------
# Registry:  operator-id -> factory
# -------------------------------------------------------------------

_OPERATORS: Dict[str, Type[Operator]] = {}


def register_operator(cls: Type[Operator]) -> Type[Operator]:
    if not cls.kind:
        raise ValueError(f"{cls.__name__} has no kind")
    _OPERATORS[cls.kind] = cls
    return cls


def operator_kinds() -> List[str]:
    return sorted(_OPERATORS)


def build_operator(kind: str, params: Tuple[Parameter, ...] = (), **options) -> Operator:
    """Instantiate the operator registered under *kind*."""
    cls = _OPERATORS.get(kind)
    if cls is None:
        raise UnregisteredOperatorError(kind)
    return cls(*params, **options)


def op_forward_backward(
    kind: str,
    inputs: Tuple[np.ndarray, ...],
    params: Tuple[Parameter, ...] = (),
    **options,
) -> Tuple[np.ndarray, Callable[[np.ndarray], Tuple[np.ndarray, ...]]]:
    """Run one operator forward; return its output and backward closure."""
    op = build_operator(kind, tuple(params), **options)
    out = op.forward(*inputs)
    return out, op.backward


def unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to *shape*."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad
