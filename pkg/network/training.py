"""
Training loop.

Every step draws ``batch`` scenes, re-samples their LiDAR points (fresh
points each step stand in for crop augmentation), accumulates gradients
with upstream ``w_i / batch`` and takes one Adam step at the scheduled
learning rate.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
from tqdm import tqdm

from core.optimizer import Adam
from dto.config import LRSchedule
from dto.reports import TrainLog
from dto.scene import SceneSample
from network.losses import total_loss
from network.model import VolumetricPropagationNetwork
from scenes.lidar import sample_lidar
from utils.reports import write_csv

logger = logging.getLogger(__name__)


def resample_points(sample: SceneSample, count: int, seed) -> SceneSample:
    """*sample* with a fresh cloud of ``min(count, valid pixels)`` points."""
    available = int((sample.depth.mask & (sample.depth.depth > 0)).sum())
    return sample.with_points(sample_lidar(sample, min(count, available), seed=seed))


def train(
    model: VolumetricPropagationNetwork,
    samples: Sequence[SceneSample],
    steps: int,
    schedule: LRSchedule = LRSchedule(),
    batch: int = 1,
    points: int = 1000,
    seed: int = 0,
    progress: bool = False,
) -> List[TrainLog]:
    if not samples:
        raise ValueError("training needs at least one sample")
    rng = np.random.default_rng(seed)
    optimizer = Adam()
    weights = model.config.weights
    logs: List[TrainLog] = []

    logger.info(
        "Training %s for %d step(s) on %d sample(s), batch %d",
        model.config.mode_label, steps, len(samples), batch,
    )
    for step in tqdm(range(steps), desc="train", disable=not progress):
        model.params.zero_grad()
        per_stage = np.zeros(len(weights))
        for b in range(batch):
            index = int(rng.integers(len(samples)))
            sample = resample_points(samples[index], points, seed=[seed, step, b])
            per_stage += model.train_step_gradients(sample, scale=1.0 / batch)
        losses = [float(l) for l in per_stage / batch]
        lr = schedule.rate(step)
        optimizer.step(model.params, lr)
        logs.append(TrainLog(step=step, stage_losses=losses, total=total_loss(losses, weights), lr=lr))
        logger.debug("  -> step %d: total %.6g (lr %.1e)", step, logs[-1].total, lr)

    if logs:
        logger.info("  -> loss %.6g -> %.6g", logs[0].total, logs[-1].total)
    return logs


def loss_columns(stages: int) -> List[str]:
    return ["step"] + [f"loss_stage{i + 1}" for i in range(stages)] + ["total"]


def write_loss_log(logs: Sequence[TrainLog], path: Union[str, Path], stages: int) -> Path:
    rows = [[log.step, *log.stage_losses, log.total] for log in logs]
    return write_csv(path, loss_columns(stages), rows)
