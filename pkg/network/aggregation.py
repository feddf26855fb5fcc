"""
3D aggregation with intermediate outputs.

Each stage runs two conv3d(3x3x3) + relu blocks on the running hidden
state and a conv3d head that reduces it to one channel, ``A_s [D, H, W]``.
Stage s+1 starts from stage s's hidden state, so every head is supervised
while the refinement stays sequential.
"""

from __future__ import annotations

from functools import partial
from typing import List, Sequence

import numpy as np

from core.chain import Chain
from core.ops.activation import ReLU
from core.ops.conv import Conv3d
from core.parameters import ParameterSet
from errors import BackwardBeforeForwardError, ShapeMismatchError


class Aggregator:
    def __init__(
        self,
        params: ParameterSet,
        in_channels: int,
        hidden: int,
        stages: int,
        rng: np.random.Generator,
        prefix: str = "aggregate",
    ):
        self.in_channels = in_channels
        self.stages = []
        width = in_channels
        for s in range(stages):
            blocks = []
            for b in range(2):
                weight = params.add(f"{prefix}.{s}.conv{b}.weight", (hidden, width, 3, 3, 3), rng)
                bias = params.add(f"{prefix}.{s}.conv{b}.bias", (hidden,), rng, init="zeros")
                blocks.extend([partial(Conv3d, weight, bias), ReLU])
                width = hidden
            head_w = params.add(f"{prefix}.{s}.head.weight", (1, hidden, 3, 3, 3), rng)
            head_b = params.add(f"{prefix}.{s}.head.bias", (1,), rng, init="zeros")
            self.stages.append((blocks, partial(Conv3d, head_w, head_b)))
        self._trace = None

    def forward(self, volume: np.ndarray) -> List[np.ndarray]:
        if volume.ndim != 4 or volume.shape[0] != self.in_channels:
            raise ShapeMismatchError(
                "aggregate", volume.shape, (self.in_channels, 0, 0, 0), "volume channels"
            )
        trace = []
        outputs = []
        hidden = volume
        for blocks, make_head in self.stages:
            body = Chain(blocks, name="aggregate-stage")
            head = make_head()
            hidden = body.forward(hidden)
            outputs.append(head.forward(hidden)[0])
            trace.append((body, head))
        self._trace = trace
        return outputs

    def backward(self, upstream: Sequence[np.ndarray]) -> np.ndarray:
        """Gradients of every stage output in, gradient of the volume out."""
        if self._trace is None:
            raise BackwardBeforeForwardError("aggregate")
        if len(upstream) != len(self._trace):
            raise ShapeMismatchError("aggregate", (len(upstream),), (len(self._trace),), "stage count")
        carry = None
        for (body, head), g in zip(reversed(self._trace), reversed(list(upstream))):
            (d_hidden,) = head.backward(np.asarray(g)[None])
            if carry is not None:
                d_hidden = d_hidden + carry
            carry = body.backward(d_hidden)
        self._trace = None
        return carry


def aggregate(aggregator: Aggregator, volume: np.ndarray) -> List[np.ndarray]:
    return aggregator.forward(volume)
