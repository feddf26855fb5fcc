"""
Depth-completion metrics.

RMSE / MAE in millimeters, iRMSE / iMAE on inverse depth in 1/km
(``1000 / z`` with z in meters), AbsRel and SqRel over the same pixels.
"""

from __future__ import annotations

import logging
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from dto.depth import DepthMap
from dto.reports import DepthMetrics
from errors import EmptyMaskError, ShapeMismatchError

logger = logging.getLogger(__name__)

Band = Tuple[float, float]


def _as_depth(pred: Union[DepthMap, np.ndarray]) -> np.ndarray:
    return pred.depth if isinstance(pred, DepthMap) else np.asarray(pred)


def _metrics(z: np.ndarray, z_hat: np.ndarray) -> DepthMetrics:
    err = z_hat - z
    positive = z_hat > 0
    excluded = int((~positive).sum())
    if excluded:
        logger.info("  -> %d pixel(s) with non-positive prediction excluded from i-metrics", excluded)
    if positive.any():
        inv_err = 1000.0 / z_hat[positive] - 1000.0 / z[positive]
        irmse = float(np.sqrt(np.mean(inv_err ** 2)))
        imae = float(np.mean(np.abs(inv_err)))
    else:
        logger.warning("no pixel with positive prediction; inverse metrics are undefined")
        irmse = imae = float("nan")
    return DepthMetrics(
        rmse_mm=float(np.sqrt(np.mean(err ** 2))) * 1000.0,
        mae_mm=float(np.mean(np.abs(err))) * 1000.0,
        irmse_per_km=irmse,
        imae_per_km=imae,
        abs_rel=float(np.mean(np.abs(err) / z)),
        sq_rel=float(np.mean(err ** 2 / z)),
        valid=int(z.size),
        excluded_inverse=excluded,
    )


def band_label(band: Band) -> str:
    lo, hi = band
    return f"{lo:g}-{hi:g}"


def evaluate_metrics(
    pred: Union[DepthMap, np.ndarray],
    truth: DepthMap,
    bands: Optional[Sequence[Band]] = None,
) -> DepthMetrics:
    """
    Metrics over the valid ground-truth pixels.

    With *bands*, the same metrics restricted to ``lo <= z < hi`` are
    attached under ``bands[label]``; empty bands are left out.
    """
    z_hat = _as_depth(pred).astype(np.float64)
    if z_hat.shape != truth.shape:
        raise ShapeMismatchError("metrics", z_hat.shape, truth.shape)
    valid = truth.mask & np.isfinite(z_hat)
    if not valid.any():
        raise EmptyMaskError("metrics: no valid ground-truth pixel")
    z = truth.depth.astype(np.float64)
    metrics = _metrics(z[valid], z_hat[valid])
    if bands:
        per_band = {}
        for lo, hi in bands:
            inside = valid & (z >= lo) & (z < hi)
            if inside.any():
                per_band[band_label((lo, hi))] = _metrics(z[inside], z_hat[inside])
        metrics.bands = per_band
    return metrics


def aggregate_metrics(items: Iterable[DepthMetrics]) -> DepthMetrics:
    """Per-sample mean of every metric (NaN i-metrics are skipped)."""
    items = list(items)
    if not items:
        raise EmptyMaskError("metrics: nothing to aggregate")

    def mean(field: str) -> float:
        values = np.array([getattr(m, field) for m in items], dtype=np.float64)
        finite = values[np.isfinite(values)]
        return float(finite.mean()) if finite.size else float("nan")

    return DepthMetrics(
        rmse_mm=mean("rmse_mm"),
        mae_mm=mean("mae_mm"),
        irmse_per_km=mean("irmse_per_km"),
        imae_per_km=mean("imae_per_km"),
        abs_rel=mean("abs_rel"),
        sq_rel=mean("sq_rel"),
        valid=sum(m.valid for m in items),
        excluded_inverse=sum(m.excluded_inverse for m in items),
    )
