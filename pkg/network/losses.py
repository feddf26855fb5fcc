"""
Training losses.

    depth_loss   masked smooth-L1 mean over valid ground-truth pixels
    total_loss   weighted sum of the per-stage depth losses
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

from core.ops.loss import SmoothL1
from dto.depth import DepthMap
from errors import EmptyMaskError, ShapeMismatchError


class DepthLoss:
    """Smooth-L1 between a predicted depth array and a ground-truth map."""

    def __init__(self, truth: DepthMap):
        if truth.valid_count == 0:
            raise EmptyMaskError("depth loss: ground truth has no valid pixel")
        self.truth = truth
        self._op = None

    def forward(self, pred: np.ndarray) -> float:
        if pred.shape != self.truth.shape:
            raise ShapeMismatchError("depth-loss", pred.shape, self.truth.shape)
        self._op = SmoothL1()
        target = self.truth.depth.astype(pred.dtype, copy=False)
        return float(self._op.forward(pred, target, self.truth.mask))

    def backward(self, upstream: float = 1.0) -> np.ndarray:
        d_pred, _ = self._op.backward(np.asarray(upstream))
        self._op = None
        return d_pred


def depth_loss(pred: DepthMap, truth: DepthMap) -> float:
    return DepthLoss(truth).forward(pred.depth)


def total_loss(stage_losses: Sequence[float], weights: Sequence[float]) -> float:
    if len(stage_losses) != len(weights):
        raise ShapeMismatchError(
            "total-loss", (len(stage_losses),), (len(weights),), "one weight per stage"
        )
    return float(sum(w * l for w, l in zip(weights, stage_losses)))


def total_loss_backward(weights: Sequence[float], upstream: float = 1.0) -> List[float]:
    """Upstream gradient of every stage loss: ``w_i * upstream``."""
    return [float(w) * upstream for w in weights]


def stage_losses(
    preds: Sequence[np.ndarray], truth: DepthMap
) -> Tuple[List[float], List[DepthLoss]]:
    """Loss of every stage output plus the objects that replay them backwards."""
    losses, ops = [], []
    for pred in preds:
        loss = DepthLoss(truth)
        losses.append(loss.forward(pred))
        ops.append(loss)
    return losses, ops
