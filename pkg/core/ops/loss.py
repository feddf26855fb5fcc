from __future__ import annotations

from typing import Optional, Tuple

import numpy as np

from core.ops.base import Operator, register_operator
from errors import EmptyMaskError, ShapeMismatchError


def smooth_l1(residual: np.ndarray) -> np.ndarray:
    """0.5 r^2 for |r| < 1, |r| - 0.5 otherwise."""
    a = np.abs(residual)
    return np.where(a < 1.0, 0.5 * residual * residual, a - 0.5)


def smooth_l1_grad(residual: np.ndarray) -> np.ndarray:
    return np.where(np.abs(residual) < 1.0, residual, np.sign(residual))


@register_operator
class SmoothL1(Operator):
    """
    Masked mean of smooth-L1 over ``pred - target``.

    ``forward(pred, target, mask=None) -> scalar``; invalid pixels add
    nothing to the value nor to either gradient.
    """

    kind = "smooth-l1"

    def forward(
        self, pred: np.ndarray, target: np.ndarray, mask: Optional[np.ndarray] = None
    ) -> np.ndarray:
        if pred.shape != target.shape:
            raise ShapeMismatchError(self.kind, pred.shape, target.shape)
        if mask is None:
            mask = np.ones(pred.shape, dtype=bool)
        elif mask.shape != pred.shape:
            raise ShapeMismatchError(self.kind, pred.shape, mask.shape, "mask")
        count = int(mask.sum())
        if count == 0:
            raise EmptyMaskError("smooth-l1: no valid pixels")
        self._check_finite(pred[mask], target[mask])

        residual = np.where(mask, pred - target, 0)
        self._save(residual, mask, count, pred.dtype)
        return np.asarray(np.sum(smooth_l1(residual) * mask) / count)

    def backward(self, upstream: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        residual, mask, count, dtype = self._restore()
        g = float(np.asarray(upstream))
        d = (g / count) * smooth_l1_grad(residual) * mask
        d = d.astype(dtype, copy=False)
        return d, -d
