"""
VolumetricPropagationNetwork: the end-to-end model.

    left, right ──extract──► F_L, F_R ─┐
    points ──(point network)──► F_P ───┴─► volume builder ─► aggregate ─► regress x S

Under early fusion the points never reach the volume: they are splatted
into a sparse depth channel appended to both input images instead.

The model owns one ``ParameterSet``; ``forward`` keeps the trace of its
components and ``backward`` replays it, accumulating parameter gradients.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from core.checkpoint import load_checkpoint, save_checkpoint
from core.parameters import ParameterSet
from dto.camera import CameraRig
from dto.config import ModelConfig
from dto.depth import DepthMap
from dto.point_cloud import PointCloud
from dto.scene import SceneSample
from dto.volume import FusionVolume
from errors import BackwardBeforeForwardError, FormatError, ShapeMismatchError
from geometry.camera import project_points
from geometry.voxel import round_half_up, voxel_indices
from network.aggregation import Aggregator
from network.features import FeatureExtractor
from network.losses import stage_losses, total_loss
from network.regression import DepthRegressor
from pointnet.factory import build_point_network
from volume.builder import VolumeBuilder, build_volume_builder

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class PipelineOutput(BaseModel):
    """Full-resolution depth of every stage plus the volume that produced it."""

    stage_depths: List[np.ndarray]
    volume: FusionVolume
    points_used: int = 0

    model_config = {"arbitrary_types_allowed": True}

    @property
    def depth(self) -> np.ndarray:
        return self.stage_depths[-1]


def sparse_depth_channel(points: PointCloud, rig: CameraRig, z_max: float) -> np.ndarray:
    """
    Nearest-pixel splat of ``z / z_max`` at full resolution, zeros elsewhere.

    The channel holds normalized depth in ``(0, 1]``, not meters, so it sits
    on the same scale as the color channels it is stacked with. Zero means
    "no point". Points outside the image or beyond ``z_max`` are skipped; where several
    points hit one pixel the nearest wins.
    """
    H, W = rig.image_height, rig.image_width
    channel = np.full(H * W, np.inf)
    if points.count:
        xyz = points.xyz.astype(np.float64)
        u, v = project_points(rig, xyz)
        iu = round_half_up(u)
        iv = round_half_up(v)
        z = xyz[:, 2]
        keep = (iu >= 0) & (iu < W) & (iv >= 0) & (iv < H) & (z <= z_max)
        np.minimum.at(channel, iv[keep] * W + iu[keep], z[keep] / z_max)
    channel[~np.isfinite(channel)] = 0.0
    return channel.reshape(H, W)


class VolumetricPropagationNetwork:
    def __init__(self, config: ModelConfig):
        self.config = config
        self.params = ParameterSet()
        rng = np.random.default_rng(config.seed)
        self.extractor = FeatureExtractor(self.params, config.image_channels, config.C, rng)
        self.point_network = build_point_network(config, self.params, rng)
        self.aggregator = Aggregator(
            self.params, config.volume_channels, config.agg_channels, config.stages, rng
        )
        self._builders: Dict[CameraRig, VolumeBuilder] = {}
        self._trace: Optional[tuple] = None
        logger.debug(
            "Model %s: %d parameter tensor(s), %d value(s)",
            config.mode_label, len(self.params), self.params.total_size,
        )

    # ------------------------------------------------------------------
    # Components
    # ------------------------------------------------------------------

    def builder(self, rig: CameraRig) -> VolumeBuilder:
        if rig not in self._builders:
            self._builders[rig] = build_volume_builder(self.config, rig)
        return self._builders[rig]

    @property
    def dtype(self):
        return next(iter(self.params)).value.dtype

    def usable_points(self, points: PointCloud, rig: CameraRig) -> PointCloud:
        """Points inside the embedding grid; the rest are dropped (and counted)."""
        if not points.count:
            return points
        spec = self.builder(rig).embed_spec
        _, accepted = voxel_indices(spec, rig, points.xyz)
        dropped = int((~accepted).sum())
        if dropped:
            logger.debug("  -> %d point(s) outside the %s grid dropped", dropped, spec.mode)
            points = points.subset(accepted)
        return points

    # ------------------------------------------------------------------
    # Forward / backward
    # ------------------------------------------------------------------

    def forward(
        self, left: np.ndarray, right: np.ndarray, points: PointCloud, rig: CameraRig
    ) -> PipelineOutput:
        c = self.config
        expected = (3, rig.image_height, rig.image_width)
        for view, image in (("left", left), ("right", right)):
            if image.shape != expected:
                raise ShapeMismatchError("model", image.shape, expected, f"{view} image vs calibration")

        dtype = self.dtype
        left = left.astype(dtype, copy=False)
        right = right.astype(dtype, copy=False)
        builder = self.builder(rig)

        if c.embeds_points:
            points = self.usable_points(points, rig)
        else:
            sparse = sparse_depth_channel(points, rig, c.z_max).astype(dtype)[None]
            left = np.concatenate([left, sparse])
            right = np.concatenate([right, sparse])

        f_left, tower_left = self.extractor.extract(left)
        f_right, tower_right = self.extractor.extract(right)

        point_features = None
        if c.embeds_points:
            point_features = self.point_network.forward(f_left, points, rig, builder.embed_spec)
            volume = builder.build(f_left, f_right, points, point_features)
        else:
            volume = builder.build(f_left, f_right, PointCloud.empty(), embed=False)

        logits = self.aggregator.forward(volume.payload)
        regressors = [DepthRegressor(builder.output_spec, rig) for _ in logits]
        depths = [r.forward(a) for r, a in zip(regressors, logits)]

        self._trace = (tower_left, tower_right, builder, point_features is not None, regressors)
        return PipelineOutput(stage_depths=depths, volume=volume, points_used=points.count)

    def backward(self, d_depths: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
        """
        Gradients of every stage depth in; accumulate parameter gradients and
        return the gradients of the two RGB images.
        """
        if self._trace is None:
            raise BackwardBeforeForwardError("model")
        tower_left, tower_right, builder, has_features, regressors = self._trace
        d_logits = [r.backward(g) for r, g in zip(regressors, d_depths)]
        d_volume = self.aggregator.backward(d_logits)
        d_left, d_right, d_points = builder.backward(d_volume)
        if has_features:
            d_image = self.point_network.backward(d_points)
            if d_image is not None:
                d_left = d_left + d_image
        d_left = tower_left.backward(d_left)
        d_right = tower_right.backward(d_right)
        self._trace = None
        return d_left[:3], d_right[:3]

    def train_step_gradients(self, sample: SceneSample, scale: float = 1.0) -> List[float]:
        """
        Forward, loss and backward on one sample.  Stage-loss upstreams are
        ``scale * w_i``; returns the stage losses.
        """
        out = self.forward(sample.left, sample.right, sample.points, sample.rig)
        losses, loss_ops = stage_losses(out.stage_depths, sample.depth)
        d_depths = [op.backward(scale * w) for op, w in zip(loss_ops, self.config.weights)]
        self.backward(d_depths)
        return losses

    def predict(
        self, left: np.ndarray, right: np.ndarray, points: PointCloud, rig: CameraRig
    ) -> DepthMap:
        """Final-stage depth at full resolution."""
        out = self.forward(left, right, points, rig)
        self._trace = None
        depth = out.depth
        return DepthMap(depth=depth, mask=np.ones(depth.shape, dtype=bool))

    # ------------------------------------------------------------------
    # Persistence
    # ------------------------------------------------------------------

    def save(self, path: PathLike) -> Path:
        path = Path(path)
        save_checkpoint(self.params, path)
        config_path(path).write_text(self.config.model_dump_json(indent=2), encoding="utf-8")
        logger.info("Checkpoint written to %s (%d parameter tensor(s))", path, len(self.params))
        return path

    @classmethod
    def load(cls, path: PathLike) -> "VolumetricPropagationNetwork":
        model = cls(load_model_config(path))
        load_checkpoint(model.params, path)
        return model

    def adopt(self, params: ParameterSet) -> None:
        """Copy values of an equally-laid-out parameter set into this model."""
        for p in self.params:
            if p.name not in params:
                raise ShapeMismatchError("adopt", p.shape, (), f"missing parameter {p.name!r}")
            value = params[p.name].value
            if value.shape != p.shape:
                raise ShapeMismatchError("adopt", p.shape, value.shape, p.name)
            p.value = value.astype(p.value.dtype, copy=True)


def config_path(checkpoint: PathLike) -> Path:
    checkpoint = Path(checkpoint)
    return checkpoint.with_name(checkpoint.name + ".json")


def load_model_config(checkpoint: PathLike) -> ModelConfig:
    sidecar = config_path(checkpoint)
    if not sidecar.exists():
        raise FormatError(f"{checkpoint}: model config {sidecar.name} not found next to it")
    try:
        return ModelConfig.model_validate_json(sidecar.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise FormatError(f"{sidecar}: invalid model config ({exc.error_count()} error(s))") from exc


def forward_pipeline(
    sample: SceneSample, config: ModelConfig, params: Optional[ParameterSet] = None
) -> Tuple[DepthMap, List[float]]:
    """Final depth and per-stage losses of *sample* under *config* / *params*."""
    model = VolumetricPropagationNetwork(config)
    if params is not None:
        model.adopt(params)
    out = model.forward(sample.left, sample.right, sample.points, sample.rig)
    model._trace = None
    losses, _ = stage_losses(out.stage_depths, sample.depth)
    depth = DepthMap(depth=out.depth, mask=np.ones(out.depth.shape, dtype=bool))
    logger.debug("  -> %s: total loss %.6g", config.mode_label, total_loss(losses, config.weights))
    return depth, losses
