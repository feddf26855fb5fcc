"""
Synthetic stereo scenes.

A scene is a ground plane plus fronto-parallel textured rectangles.  Both
views are ray-cast against the same analytic surfaces and every surface is
textured in its own world coordinates, so a 3D point has one colour no
matter which camera sees it.  Ground truth depth is the analytic hit depth
of the left view (nearest surface wins); pixels that see the sky or land at
``z >= z_max`` are invalid and stored as 0.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, model_validator
from scipy import ndimage

from dto.camera import CameraRig
from dto.depth import DepthMap
from dto.point_cloud import PointCloud
from dto.scene import SceneSample
from scenes.lidar import sample_lidar

logger = logging.getLogger(__name__)

View = Literal["left", "right"]

CAMERA_HEIGHT = 1.6  # meters above the ground plane (y points down)
SKY_COLOUR = (0.55, 0.7, 0.9)
NOISE_CELLS = 32


class Texture(BaseModel):
    """Sinusoids plus bilinear lattice noise over 2-D surface coordinates."""

    frequencies: np.ndarray  # [K, 2] cycles per meter
    phases: np.ndarray  # [K]
    amplitudes: np.ndarray  # [K]
    noise: np.ndarray  # [NOISE_CELLS, NOISE_CELLS] in [-1, 1]
    noise_cell: float  # meters per lattice cell
    noise_amplitude: float = 0.15

    model_config = {"arbitrary_types_allowed": True}

    @classmethod
    def random(cls, rng: np.random.Generator, pixel_size: float) -> "Texture":
        """
        Texture whose detail is a few pixels wide at the surface's depth.
        Frequencies lean horizontal so epipolar matching has gradients.
        """
        K = 3
        cycles_per_px = rng.uniform(0.03, 0.15, K)
        angles = rng.uniform(-0.6, 0.6, K)
        freq = cycles_per_px / pixel_size
        return cls(
            frequencies=np.stack([freq * np.cos(angles), freq * np.sin(angles)], axis=1),
            phases=rng.uniform(0.0, 2 * np.pi, K),
            amplitudes=rng.uniform(0.05, 0.15, K),
            noise=rng.uniform(-1.0, 1.0, (NOISE_CELLS, NOISE_CELLS)),
            noise_cell=3.0 * pixel_size,
        )

    def __call__(self, s: np.ndarray, t: np.ndarray) -> np.ndarray:
        value = np.full(s.shape, 0.55)
        for (fs, ft), phase, amp in zip(self.frequencies, self.phases, self.amplitudes):
            value += amp * np.sin(2 * np.pi * (fs * s + ft * t) + phase)
        if s.size:
            lattice = ndimage.map_coordinates(
                self.noise, [s / self.noise_cell, t / self.noise_cell], order=1, mode="grid-wrap"
            )
            value += self.noise_amplitude * lattice
        return value


class Rectangle(BaseModel):
    """Axis-aligned rectangle at constant depth ``z`` (left-camera frame)."""

    x0: float
    x1: float
    y0: float
    y1: float
    z: float
    colour: Tuple[float, float, float]
    texture: Texture

    @model_validator(mode="after")
    def _check(self) -> "Rectangle":
        if not (self.x0 < self.x1 and self.y0 < self.y1 and self.z > 0):
            raise ValueError(f"degenerate rectangle {self.x0, self.x1, self.y0, self.y1, self.z}")
        return self


class Ground(BaseModel):
    height: float = CAMERA_HEIGHT
    colour: Tuple[float, float, float] = (0.6, 0.55, 0.45)
    texture: Texture


class SceneLayout(BaseModel):
    rectangles: List[Rectangle] = []
    ground: Optional[Ground] = None
    z_max: float = 100.0


# -------------------------------------------------------------------
# Ray casting
# -------------------------------------------------------------------


def shade(
    layout: SceneLayout, rig: CameraRig, u: np.ndarray, v: np.ndarray, view: View = "left"
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Colour ``[3, N]`` (unquantized, in [0, 1]) and hit depth ``[N]`` (inf for
    sky) of the rays through pixel coordinates (u, v) of one view.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    v = np.asarray(v, dtype=np.float64).ravel()
    origin = 0.0 if view == "left" else rig.baseline
    dx = (u - rig.cx) / rig.fx
    dy = (v - rig.cy) / rig.fy

    depth = np.full(u.shape, np.inf)
    colour = np.tile(np.asarray(SKY_COLOUR)[:, None], (1, u.size))

    surfaces = []
    if layout.ground is not None:
        g = layout.ground
        below = dy > 0
        z = np.where(below, g.height / np.where(below, dy, 1.0), np.inf)
        surfaces.append((z, g.colour, g.texture, lambda z: (origin + dx * z, z)))
    for rect in layout.rectangles:
        X = origin + dx * rect.z
        Y = dy * rect.z
        inside = (X >= rect.x0) & (X <= rect.x1) & (Y >= rect.y0) & (Y <= rect.y1)
        z = np.where(inside, rect.z, np.inf)
        surfaces.append((z, rect.colour, rect.texture, lambda z, r=rect: (origin + dx * r.z, dy * r.z)))

    for z, surface_colour, texture, coords in surfaces:
        nearer = z < depth
        if not nearer.any():
            continue
        depth = np.where(nearer, z, depth)
        s, t = coords(np.where(nearer, z, 1.0))
        lum = texture(s[nearer], t[nearer])
        colour[:, nearer] = np.clip(np.asarray(surface_colour)[:, None] * lum[None], 0.0, 1.0)
    return colour, depth


def quantize(image: np.ndarray) -> np.ndarray:
    """8-bit levels k / 255 as float32."""
    return (np.round(np.clip(image, 0.0, 1.0) * 255.0) / 255.0).astype(np.float32)


def render_view(layout: SceneLayout, rig: CameraRig, view: View) -> Tuple[np.ndarray, np.ndarray]:
    H, W = rig.image_height, rig.image_width
    v, u = np.mgrid[0:H, 0:W].astype(np.float64)
    colour, depth = shade(layout, rig, u, v, view)
    return quantize(colour.reshape(3, H, W)), depth.reshape(H, W)


def render_scene(
    layout: SceneLayout, rig: CameraRig, seed: int = 0, name: str = ""
) -> SceneSample:
    """Both views plus dense ground truth; the point cloud is left empty."""
    left, z = render_view(layout, rig, "left")
    right, _ = render_view(layout, rig, "right")
    valid = np.isfinite(z) & (z < layout.z_max)
    depth = DepthMap(depth=np.where(valid, z, 0.0), mask=valid)
    return SceneSample(
        left=left, right=right, depth=depth, points=PointCloud.empty(), rig=rig, seed=seed, name=name
    )


# -------------------------------------------------------------------
# Random layouts
# -------------------------------------------------------------------


def random_layout(
    rng: np.random.Generator, rig: CameraRig, object_count: int, z_max: float = 100.0
) -> SceneLayout:
    """
    ``object_count`` rectangles with depth uniform in [5, 0.9 z_max] and an
    on-screen footprint of 15-50 % of each image extent, over a ground plane.
    """
    if object_count < 1:
        raise ValueError(f"object_count must be >= 1, got {object_count}")
    W, H = rig.image_width, rig.image_height
    rectangles = []
    for _ in range(object_count):
        z = rng.uniform(5.0, 0.9 * z_max)
        half_w = rng.uniform(0.15, 0.5) * W / 2
        half_h = rng.uniform(0.15, 0.5) * H / 2
        uc = rng.uniform(0.0, W)
        vc = rng.uniform(0.0, H)
        rectangles.append(
            Rectangle(
                x0=(uc - half_w - rig.cx) * z / rig.fx,
                x1=(uc + half_w - rig.cx) * z / rig.fx,
                y0=(vc - half_h - rig.cy) * z / rig.fy,
                y1=(vc + half_h - rig.cy) * z / rig.fy,
                z=z,
                colour=tuple(rng.uniform(0.5, 1.0, 3)),
                texture=Texture.random(rng, pixel_size=z / rig.fx),
            )
        )
    ground = Ground(texture=Texture.random(rng, pixel_size=10.0 / rig.fx))
    return SceneLayout(rectangles=rectangles, ground=ground, z_max=z_max)


def generate_scene(
    seed: int,
    rig: CameraRig,
    object_count: int = 4,
    index: int = 0,
    z_max: float = 100.0,
    points: int = 0,
    dropout: float = 0.0,
) -> SceneSample:
    """
    Deterministic in ``(seed, index)``.  With ``points > 0`` the sample also
    carries a simulated LiDAR cloud (capped at the valid pixel count).
    """
    if rig.image_width % 4 or rig.image_height % 4:
        raise ValueError(
            f"image extents must be divisible by 4, got {rig.image_width}x{rig.image_height}"
        )
    rng = np.random.default_rng([seed, index])
    layout = random_layout(rng, rig, object_count, z_max)
    sample = render_scene(layout, rig, seed=seed, name=f"{index:04d}")
    if points:
        count = min(points, sample.depth.valid_count)
        sample = sample.with_points(sample_lidar(sample, count, seed=[seed, index], dropout=dropout))
    return sample


def generate_scenes(
    frames: int,
    seed: int,
    rig: CameraRig,
    object_count: int = 4,
    z_max: float = 100.0,
    points: int = 0,
    threads: int = 1,
) -> List[SceneSample]:
    """``frames`` samples, indices 0..frames-1; serial and threaded runs agree."""

    def make(index: int) -> SceneSample:
        return generate_scene(seed, rig, object_count, index, z_max, points)

    logger.info("Generating %d scene(s) (seed %d, %d worker(s))", frames, seed, threads)
    if threads > 1 and frames > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(make, range(frames)))
    else:
        samples = [make(i) for i in range(frames)]
    for sample in samples:
        logger.debug("  -> %s: %d valid depth pixel(s), %d point(s)",
                     sample.name, sample.depth.valid_count, sample.points.count)
    return samples


def single_plane_layout(
    rig: CameraRig, z: float, footprint: Sequence[float], rng: np.random.Generator,
    z_max: float = 100.0,
) -> SceneLayout:
    """One rectangle at depth *z* covering pixel box (u0, v0, u1, v1), no ground."""
    u0, v0, u1, v1 = footprint
    rect = Rectangle(
        x0=(u0 - rig.cx) * z / rig.fx,
        x1=(u1 - rig.cx) * z / rig.fx,
        y0=(v0 - rig.cy) * z / rig.fy,
        y1=(v1 - rig.cy) * z / rig.fy,
        z=z,
        colour=(0.9, 0.8, 0.7),
        texture=Texture.random(rng, pixel_size=z / rig.fx),
    )
    return SceneLayout(rectangles=[rect], z_max=z_max)
