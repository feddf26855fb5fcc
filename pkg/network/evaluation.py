"""
Dataset evaluation: one metrics row per sample plus an aggregate.

Samples are independent given the trained parameters, so they may be
evaluated on a thread pool; the model is only read.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from dto.point_cloud import PointCloud
from dto.reports import DepthMetrics, MetricsRow
from dto.scene import SceneSample
from errors import EmptyMaskError
from network.metrics import aggregate_metrics, evaluate_metrics
from network.model import VolumetricPropagationNetwork
from scenes.lidar import sample_lidar

logger = logging.getLogger(__name__)

AGGREGATE = "aggregate"


def evaluation_points(
    sample: SceneSample,
    index: int,
    points: Optional[int] = None,
    dropout: float = 0.0,
    seed: int = 0,
) -> PointCloud:
    """
    The cloud a sample is evaluated with: its stored points, or ``points``
    fresh ground-truth samples; then thinned by ``dropout``.
    """
    rng_seed = [seed, index]
    if points is not None:
        count = min(points, sample.depth.valid_count)
        if count < points:
            logger.info("  -> %s: only %d of %d requested point(s) available", sample.name, count, points)
        return sample_lidar(sample, count, seed=rng_seed, dropout=dropout)
    cloud = sample.points
    if dropout > 0 and cloud.count:
        keep = np.random.default_rng(rng_seed).random(cloud.count) >= dropout
        cloud = cloud.subset(keep)
    return cloud


def evaluate_sample(
    model: VolumetricPropagationNetwork,
    sample: SceneSample,
    index: int,
    points: Optional[int] = None,
    dropout: float = 0.0,
    seed: int = 0,
) -> Tuple[DepthMetrics, int]:
    cloud = evaluation_points(sample, index, points, dropout, seed)
    pred = model.predict(sample.left, sample.right, cloud, sample.rig)
    return evaluate_metrics(pred, sample.depth), cloud.count


def evaluate_dataset(
    model: VolumetricPropagationNetwork,
    samples: Sequence[SceneSample],
    points: Optional[int] = None,
    dropout: float = 0.0,
    seed: int = 0,
    threads: int = 1,
    label: str = AGGREGATE,
) -> Tuple[List[MetricsRow], Optional[MetricsRow]]:
    """
    Per-sample rows and the aggregate row (``None`` when no sample could be
    evaluated).  A sample without valid ground truth is logged and skipped.
    """

    def run(item):
        index, sample = item
        try:
            return evaluate_sample(model, sample, index, points, dropout, seed)
        except EmptyMaskError:
            logger.exception("Sample %s skipped", sample.name or index)
            return None

    items = list(enumerate(samples))
    if threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, items))
    else:
        results = [run(item) for item in items]

    rows: List[MetricsRow] = []
    evaluated: List[DepthMetrics] = []
    counts: List[int] = []
    for (index, sample), result in zip(items, results):
        if result is None:
            continue
        metrics, count = result
        rows.append(MetricsRow.from_metrics(sample.name or f"{index:04d}", metrics, float(count)))
        evaluated.append(metrics)
        counts.append(count)
    if not evaluated:
        return rows, None
    summary = aggregate_metrics(evaluated)
    logger.info(
        "  -> %s: RMSE %.1f mm, MAE %.1f mm over %d sample(s)",
        label, summary.rmse_mm, summary.mae_mm, len(evaluated),
    )
    return rows, MetricsRow.from_metrics(label, summary, float(np.mean(counts)))
