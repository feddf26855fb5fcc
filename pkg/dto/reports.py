"""
Report DTOs written by the CLI as CSV rows.

Column names are part of the on-disk contract; ``CSV_COLUMNS`` on each
model fixes their order.
"""

from __future__ import annotations

from typing import ClassVar, Dict, List, Optional

from pydantic import BaseModel


class GradcheckReport(BaseModel):
    """Result of one probe: worst relative error per input / parameter."""

    kind: str
    errors: Dict[str, float] = {}
    tolerance: float = 1e-3
    probes: int = 1

    @property
    def max_error(self) -> float:
        return max(self.errors.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"


class QuantizationRow(BaseModel):
    CSV_COLUMNS: ClassVar[List[str]] = [
        "spec", "band_lo_m", "band_hi_m", "count", "mean_abs_err_m", "max_abs_err_m",
    ]

    spec: str
    band_lo_m: float
    band_hi_m: float
    count: int
    mean_abs_err_m: float
    max_abs_err_m: float


class DepthMetrics(BaseModel):
    """
    Depth-completion metrics.  RMSE/MAE in millimeters, iRMSE/iMAE in 1/km,
    AbsRel/SqRel as in the range-band table (dimensionless / meters).
    """

    rmse_mm: float
    mae_mm: float
    irmse_per_km: float
    imae_per_km: float
    abs_rel: float
    sq_rel: float
    valid: int
    excluded_inverse: int = 0
    bands: Dict[str, "DepthMetrics"] = {}


class MetricsRow(BaseModel):
    CSV_COLUMNS: ClassVar[List[str]] = [
        "sample", "rmse_mm", "mae_mm", "irmse_per_km", "imae_per_km", "points",
        "abs_rel", "sq_rel",
    ]

    sample: str
    rmse_mm: float
    mae_mm: float
    irmse_per_km: float
    imae_per_km: float
    points: float
    abs_rel: float
    sq_rel: float

    @classmethod
    def from_metrics(cls, sample: str, metrics: DepthMetrics, points: float) -> "MetricsRow":
        return cls(
            sample=sample,
            rmse_mm=metrics.rmse_mm,
            mae_mm=metrics.mae_mm,
            irmse_per_km=metrics.irmse_per_km,
            imae_per_km=metrics.imae_per_km,
            points=points,
            abs_rel=metrics.abs_rel,
            sq_rel=metrics.sq_rel,
        )


class AblationRow(BaseModel):
    CSV_COLUMNS: ClassVar[List[str]] = [
        "volume", "pointnet", "fusion", "seed",
        "rmse_mm", "mae_mm", "irmse_per_km", "imae_per_km",
    ]

    volume: str
    pointnet: str
    fusion: str
    seed: str
    rmse_mm: float
    mae_mm: float
    irmse_per_km: float
    imae_per_km: float


class TrainLog(BaseModel):
    """Per-step stage losses; ``total`` is the weighted sum."""

    step: int
    stage_losses: List[float]
    total: float
    lr: Optional[float] = None


DepthMetrics.model_rebuild()
