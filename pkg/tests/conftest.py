"""Shared fixtures: rigs, grids and a rendered micro dataset."""

from __future__ import annotations

import numpy as np
import pytest

from dto.camera import CameraRig, VoxelGridSpec
from dto.config import ModelConfig
from dto.point_cloud import PointCloud
from geometry.camera import backproject_pixels
from scenes.generator import generate_scene, generate_scenes


@pytest.fixture
def rig() -> CameraRig:
    """fx = fy = 100, principal point (50, 50), 0.5 m baseline, 128 x 64."""
    return CameraRig(fx=100.0, fy=100.0, cx=50.0, cy=50.0, baseline=0.5, image_width=128, image_height=64)


@pytest.fixture
def grid(rig) -> VoxelGridSpec:
    return VoxelGridSpec.for_rig(rig, D=48, z_max=100.0)


@pytest.fixture
def small_rig() -> CameraRig:
    return CameraRig(fx=16.0, fy=16.0, cx=15.5, cy=7.5, baseline=0.5, image_width=32, image_height=16)


@pytest.fixture
def small_config() -> ModelConfig:
    return ModelConfig(C=2, D=8, z_max=20.0, stages=2, agg_channels=2)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def random_cloud(
    rig: CameraRig, rng: np.random.Generator, count: int, z_range=(2.0, 18.0), margin: float = 4.0
) -> PointCloud:
    """Points whose projections stay ``margin`` pixels inside the image."""
    u = rng.uniform(0.0, rig.image_width - margin, count)
    v = rng.uniform(0.0, rig.image_height - margin, count)
    z = rng.uniform(*z_range, count)
    return PointCloud(xyz=backproject_pixels(rig, u, v, z))


@pytest.fixture
def small_sample(small_rig):
    return generate_scene(seed=0, rig=small_rig, object_count=2, z_max=20.0, points=60)


@pytest.fixture
def micro_rig() -> CameraRig:
    return CameraRig(fx=32.0, fy=32.0, cx=31.5, cy=15.5, baseline=0.5, image_width=64, image_height=32)


@pytest.fixture
def micro_dataset(micro_rig):
    return generate_scenes(frames=2, seed=5, rig=micro_rig, object_count=2, z_max=20.0, points=80)


@pytest.fixture
def make_cloud():
    return random_cloud
