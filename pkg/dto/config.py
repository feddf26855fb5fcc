"""
Typed configuration.

    ModelConfig   network hyper-parameters and the three ablation axes
    LRSchedule    two-phase learning-rate schedule (1e-3 -> 1e-4 shape)
    RunConfig     validated options of one CLI invocation
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ValidationError, field_validator, model_validator

from errors import ConfigError

VolumeMode = Literal["fusion", "cost", "depth"]
PointMode = Literal["raw", "mlp", "fusionconv"]
FusionLevel = Literal["early", "intermediate"]

# Per-stage loss weights for the three-stage network.
STAGE_WEIGHTS = (0.5, 0.7, 1.0)


def default_stage_weights(stages: int) -> List[float]:
    """The trailing default weights for S <= 3, a 0.5 -> 1.0 ramp beyond."""
    if stages <= len(STAGE_WEIGHTS):
        return list(STAGE_WEIGHTS[len(STAGE_WEIGHTS) - stages:])
    step = 0.5 / (stages - 1)
    return [0.5 + i * step for i in range(stages)]


class ModelConfig(BaseModel):
    C: int = 8
    D: int = 48
    z_max: float = 100.0
    stages: int = 3
    weights: List[float] = []
    volume: VolumeMode = "fusion"
    pointnet: PointMode = "fusionconv"
    fusion: FusionLevel = "intermediate"

    agg_channels: int = 8
    window: Tuple[int, int, int] = (1, 1, 1)
    fusionconv_layers: int = 3
    mlp_layers: int = 3
    d_max: Optional[float] = None
    downsample: int = 4
    seed: int = 0

    @model_validator(mode="before")
    @classmethod
    def _default_weights(cls, data):
        if isinstance(data, dict) and not data.get("weights"):
            data = dict(data)
            data["weights"] = default_stage_weights(int(data.get("stages", 3)))
        return data

    @field_validator("window")
    @classmethod
    def _check_window(cls, value: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(w < 0 for w in value):
            raise ValueError(f"window extents must be >= 0, got {value}")
        return value

    @model_validator(mode="after")
    def _check(self) -> "ModelConfig":
        if self.C < 1 or self.D < 2 or self.stages < 1:
            raise ValueError(
                f"need C >= 1, D >= 2, stages >= 1 (got C={self.C}, D={self.D}, "
                f"stages={self.stages})"
            )
        if len(self.weights) != self.stages:
            raise ValueError(
                f"{len(self.weights)} loss weight(s) for {self.stages} stage(s)"
            )
        if self.fusion == "early" and self.pointnet != "raw":
            raise ValueError(
                "early fusion requires --pointnet raw "
                "(points enter as an image channel, not as point features)"
            )
        return self

    @classmethod
    def build(cls, **fields) -> "ModelConfig":
        """Construct, translating validation failures into ConfigError."""
        try:
            return cls(**fields)
        except ValidationError as exc:
            messages = "; ".join(err["msg"] for err in exc.errors())
            raise ConfigError(messages) from exc

    # ------------------------------------------------------------------
    # Derived layout
    # ------------------------------------------------------------------

    @property
    def effective_d_max(self) -> float:
        return float(self.d_max) if self.d_max else float(self.D - 1)

    @property
    def image_channels(self) -> int:
        """RGB, plus the projected sparse-depth channel under early fusion."""
        return 4 if self.fusion == "early" else 3

    @property
    def embeds_points(self) -> bool:
        return self.fusion == "intermediate"

    @property
    def point_channels(self) -> int:
        if not self.embeds_points:
            return 0
        return 1 if self.pointnet == "raw" else self.C

    @property
    def volume_channels(self) -> int:
        """2C (early), 2C+1 (raw occupancy) or 3C (embedded point features)."""
        return 2 * self.C + self.point_channels

    @property
    def mode_label(self) -> str:
        return f"{self.volume}:{self.pointnet}:{self.fusion}"


class LRSchedule(BaseModel):
    lr: float = 1e-3
    lr2: float = 1e-4
    decay_step: Optional[int] = None

    @model_validator(mode="after")
    def _check(self) -> "LRSchedule":
        if not (self.lr > 0 and self.lr2 > 0):
            raise ValueError("learning rates must be positive")
        if self.decay_step is not None and self.decay_step < 0:
            raise ValueError("decay step must be >= 0")
        return self

    def rate(self, step: int) -> float:
        if self.decay_step is not None and step >= self.decay_step:
            return self.lr2
        return self.lr


class RunConfig(BaseModel):
    """Options shared by the subcommands; unused fields stay at defaults."""

    subcommand: str
    data: Optional[Path] = None
    model_path: Optional[Path] = None
    report: Optional[Path] = None
    model: Optional[ModelConfig] = None
    steps: int = 200
    batch: int = 1
    schedule: LRSchedule = LRSchedule()
    seed: int = 0
    points_train: int = 1000
    points: Optional[int] = None
    dropout: float = 0.0
    threads: int = 1

    @model_validator(mode="after")
    def _check(self) -> "RunConfig":
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if self.points_train < 0 or (self.points is not None and self.points < 0):
            raise ValueError("point counts must be >= 0")
        if not 0.0 <= self.dropout <= 1.0:
            raise ValueError(f"dropout must lie in [0, 1], got {self.dropout}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        return self
