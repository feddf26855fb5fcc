"""
Image feature extractor.

    conv3x3 / stride 2 + relu  ->  conv3x3 / stride 2 + relu  ->  conv3x3

Input ``[Cin, 4H, 4W]`` (Cin = 3, or 4 with the sparse-depth channel),
output ``[C, H, W]``.  The left and right towers share one set of weights;
each call to ``tower()`` returns a fresh ``Chain`` bound to them.
"""

from __future__ import annotations

from functools import partial

import numpy as np

from core.chain import Chain
from core.ops.activation import ReLU
from core.ops.conv import Conv2d
from core.parameters import ParameterSet
from errors import ShapeMismatchError

DOWNSAMPLE = 4


class FeatureExtractor:
    def __init__(
        self,
        params: ParameterSet,
        in_channels: int,
        channels: int,
        rng: np.random.Generator,
        prefix: str = "features",
    ):
        self.in_channels = in_channels
        self.channels = channels
        self.convs = []
        widths = [in_channels, channels, channels, channels]
        for i, stride in enumerate((2, 2, 1)):
            weight = params.add(f"{prefix}.{i}.weight", (widths[i + 1], widths[i], 3, 3), rng)
            bias = params.add(f"{prefix}.{i}.bias", (widths[i + 1],), rng, init="zeros")
            self.convs.append((weight, bias, stride))

    def tower(self) -> Chain:
        factories = []
        for i, (weight, bias, stride) in enumerate(self.convs):
            factories.append(partial(Conv2d, weight, bias, stride=stride))
            if i < len(self.convs) - 1:
                factories.append(ReLU)
        return Chain(factories, name="feature-extractor")

    def check_input(self, image: np.ndarray) -> None:
        if image.ndim != 3 or image.shape[0] != self.in_channels:
            raise ShapeMismatchError(
                "feature-extractor", image.shape, (self.in_channels, 0, 0), "input channels"
            )
        if image.shape[1] % DOWNSAMPLE or image.shape[2] % DOWNSAMPLE:
            raise ShapeMismatchError(
                "feature-extractor", image.shape[1:], (DOWNSAMPLE, DOWNSAMPLE),
                f"image extents must be divisible by {DOWNSAMPLE}",
            )

    def extract(self, image: np.ndarray) -> tuple[np.ndarray, Chain]:
        """Features of one view plus the chain that can replay it backwards."""
        self.check_input(image)
        chain = self.tower()
        return chain.forward(image), chain


def extract_image_features(extractor: FeatureExtractor, image: np.ndarray) -> np.ndarray:
    features, _ = extractor.extract(image)
    return features
